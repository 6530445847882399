mod common;

use common::*;
use fimest::crlb::{invert_matrix_to_crlb, loading_amount, weighted_volume, CrlbMatrix, WeightMatrix};
use fimest::rng::CtrRng;
use fimest::Error;
use nalgebra::DMatrix;
use proptest::prelude::*;

#[test]
fn round_trip_on_random_spd() {
    let mut rng = CtrRng::new(401, 0);
    for i in 0..100 {
        let d = 1 + i % 7;
        let f = random_spd(d, &mut rng);
        let c = invert_matrix_to_crlb(&f, 1e-6).unwrap();
        let amount = loading_amount(&f, 1e-6);
        let reg = &f + DMatrix::identity(d, d) * amount;
        let back = c.matrix().clone().try_inverse().unwrap();
        assert!((&back - &reg).norm() / reg.norm() < 1e-10);
        assert!(c.std_devs().iter().zip(0..d).all(|(s, j)| (s * s - c.matrix()[(j, j)]).abs() < 1e-14));
    }
}

#[test]
fn volume_equals_log_determinant() {
    let mut rng = CtrRng::new(402, 0);
    for i in 0..50 {
        let d = 1 + i % 5;
        let c = CrlbMatrix::from_matrix(random_spd(d, &mut rng)).unwrap();
        let w: Vec<f64> = (0..d).map(|_| 0.2 + rng.uniform()).collect();
        let v = weighted_volume(&c, &WeightMatrix::new(w.clone()).unwrap()).unwrap();
        // log det(V D W Vᵀ) = log det C + log det W.
        let direct = c.matrix().clone().lu().determinant().ln() + w.iter().map(|x| x.ln()).sum::<f64>();
        assert!((v - direct).abs() < 1e-10 * direct.abs().max(1.0));
    }
}

#[test]
fn singular_fim_inverts_after_loading() {
    let f = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
    let c = invert_matrix_to_crlb(&f, 0.1).unwrap();
    assert!((c.loading_used() - 0.1).abs() < 1e-15);
    assert!(c.matrix().iter().all(|v| v.is_finite()));
}

#[test]
fn weight_errors() {
    let c = CrlbMatrix::from_matrix(DMatrix::identity(3, 3)).unwrap();
    assert!(matches!(
        weighted_volume(&c, &WeightMatrix::new(vec![1.0, 1.0]).unwrap()),
        Err(Error::DimensionMismatch { .. })
    ));
    assert!(matches!(
        weighted_volume(&c, &WeightMatrix::new(vec![1.0, 0.0, 1.0]).unwrap()),
        Err(Error::SingularWeight { index: 1 })
    ));
}

#[test]
fn more_loading_never_raises_the_bound() {
    let mut rng = CtrRng::new(403, 0);
    for _ in 0..30 {
        let f = random_psd(4, 2, &mut rng);
        let mut last: Option<Vec<f64>> = None;
        for eps in [1e-4, 1e-3, 1e-2, 1e-1, 1.0] {
            let c = invert_matrix_to_crlb(&f, eps).unwrap();
            let mut ev: Vec<f64> = c.matrix().clone().symmetric_eigenvalues().iter().copied().collect();
            ev.sort_by(f64::total_cmp);
            if let Some(prev) = &last {
                assert!(ev.iter().zip(prev).all(|(a, b)| *a <= b * (1.0 + 1e-12)));
            }
            last = Some(ev);
        }
    }
}

proptest! {
    #[test]
    fn scaling_weights_shifts_volume(s in 0.01f64..100.0, d in 1usize..6) {
        let c = CrlbMatrix::from_matrix(DMatrix::identity(d, d) * 2.0).unwrap();
        let base = weighted_volume(&c, &WeightMatrix::identity(d)).unwrap();
        let scaled = weighted_volume(&c, &WeightMatrix::new(vec![s; d]).unwrap()).unwrap();
        prop_assert!((scaled - base - d as f64 * s.ln()).abs() < 1e-12);
    }
}
