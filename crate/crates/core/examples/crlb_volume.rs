//! Cramér-Rao bounds and weighted volumes from a FIM.

use fimest::crlb::{invert_to_crlb, weighted_volume, WeightMatrix, DEFAULT_LOADING};
use fimest::fim::{FimEstimate, FimMethod};
use nalgebra::DMatrix;

fn main() -> fimest::Result<()> {
    let f = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.0, 1.0, 2.0, 0.5, 0.0, 0.5, 1.0]);
    let fim = FimEstimate::from_matrix(f, FimMethod::PlainLs)?;
    let c = invert_to_crlb(&fim, DEFAULT_LOADING)?;
    println!("bound (loading {:.2e}){}", c.loading_used(), c.matrix());
    println!("standard deviations {:.4?}", c.std_devs());
    for w in [vec![1.0, 1.0, 1.0], vec![10.0, 1.0, 1.0]] {
        let v = weighted_volume(&c, &WeightMatrix::new(w.clone())?)?;
        println!("weights {w:?}: log volume {v:.4}");
    }

    // A rank-deficient FIM still inverts after loading.
    let singular = FimEstimate::from_matrix(DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]), FimMethod::PlainLs)?;
    println!("singular FIM bound{}", invert_to_crlb(&singular, 0.1)?.matrix());
    Ok(())
}
