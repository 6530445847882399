//! The constrained solver on noiseless and noisy synthetic data: exact
//! quadratic forms are recovered, and an indefinite least-squares solution
//! is pulled back into the PSD cone with its diagonal held fixed.

use fimest::fim::{ls_fim, psd_constrained_fim, sample_perturbations, QVector};
use fimest::rng::CtrRng;
use nalgebra::DMatrix;

fn main() -> fimest::Result<()> {
    let truth = DMatrix::from_row_slice(3, 3, &[2.0, 0.9, 0.3, 0.9, 1.0, -0.2, 0.3, -0.2, 0.5]);
    let design = sample_perturbations(3, 30, 1.0, 5)?;

    let exact = QVector::from_quadratic_form(&design, &truth);
    let diag: Vec<f64> = truth.diagonal().iter().copied().collect();
    let psd = psd_constrained_fim(&design, &exact, &diag)?;
    println!("noiseless recovery error {:.2e}", (psd.matrix() - &truth).abs().max());

    // Heavy noise makes the unconstrained fit indefinite.
    let mut rng = CtrRng::new(9, 0);
    let noisy: Vec<f64> = exact.values().iter().map(|q| q + 2.0 * rng.normal()).collect();
    let noisy = QVector::synthetic(noisy);
    let ls = ls_fim(&design, &noisy)?;
    let psd = psd_constrained_fim(&design, &noisy, &diag)?;
    println!("plain LS min eigenvalue {:+.4}", ls.diagnostics().min_eigenvalue);
    println!(
        "PSD      min eigenvalue {:+.4} after {} iterations{}",
        psd.diagnostics().min_eigenvalue,
        psd.diagnostics().iterations,
        psd.matrix()
    );
    Ok(())
}
