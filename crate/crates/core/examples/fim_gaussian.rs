//! Estimate the FIM of a 3-D Gaussian mean model at θ = 0 by plain least
//! squares and by the PSD-constrained solver.

use fimest::fim::{
    diagonal_fim, estimate_q, ls_fim, psd_constrained_fim, sample_perturbations_with, vec_len, PerturbationLaw,
    QOptions,
};
use fimest::models::GaussianMeanModel;
use fimest::rng::{derive_path, CtrRng};

fn main() -> fimest::Result<()> {
    let d = 3;
    let n = 1000;
    let seed = 11;
    let law = PerturbationLaw::Gaussian { sigma: 0.05f64.sqrt() };
    let model = GaussianMeanModel::standard(d)?;
    let theta = vec![0.0; d];

    let design = sample_perturbations_with(d, 10 * vec_len(d), law, derive_path(seed, &[0]))?;
    let q = estimate_q(&model, &theta, &design, n, n, derive_path(seed, &[1]), QOptions::default())?;
    let ls = ls_fim(&design, &q)?;
    println!("plain LS{}min eigenvalue {:.4}", ls.matrix(), ls.diagnostics().min_eigenvalue);

    let mut rng = CtrRng::new(derive_path(seed, &[2]), 0);
    let magnitudes: Vec<Vec<f64>> = (0..d)
        .map(|_| (0..10).map(|_| law.draw(1, &mut rng)[0].abs()).collect())
        .collect();
    let diag = diagonal_fim(&model, &theta, &magnitudes, n, n, derive_path(seed, &[3]), QOptions::default())?;
    let psd = psd_constrained_fim(&design, &q, &diag)?;
    println!(
        "PSD-constrained (diagonal {diag:.4?}){}min eigenvalue {:.4}",
        psd.matrix(),
        psd.diagnostics().min_eigenvalue
    );
    Ok(())
}
