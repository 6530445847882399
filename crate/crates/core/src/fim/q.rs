use super::design::PerturbationDesign;
use crate::divergence::{estimate_divergence, DivergenceEstimate};
use crate::error::{Error, Result};
use crate::models::GenerativeModel;
use crate::rng::derive_path;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

/// Tag of the reference-sample seed when one reference set is shared by
/// every perturbation.
const SHARED_REFERENCE_TAG: u64 = u64::MAX;

/// Where a `Q_k` value came from.
#[derive(Clone, Debug, PartialEq)]
pub enum QSource {
    /// Estimated from samples: `Q_k = 2 · d_hat`.
    Sampled {
        estimate: DivergenceEstimate,
        reference_seed: u64,
        perturbed_seed: u64,
    },
    /// Supplied directly, e.g. the exact quadratic form `uᵀFu`.
    Synthetic,
}

#[derive(Clone, Debug)]
pub struct QVector {
    values: Vec<f64>,
    sources: Vec<QSource>,
}

impl QVector {
    pub fn synthetic(values: Vec<f64>) -> Self {
        let sources = vec![QSource::Synthetic; values.len()];
        Self { values, sources }
    }

    /// Noiseless `Q_k = u_kᵀ F u_k`.
    pub fn from_quadratic_form(design: &PerturbationDesign, fim: &DMatrix<f64>) -> Self {
        let values = design
            .directions()
            .iter()
            .map(|u| {
                let u = DVector::from_row_slice(u);
                (u.transpose() * fim * &u)[(0, 0)]
            })
            .collect();
        Self::synthetic(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sources(&self) -> &[QSource] {
        &self.sources
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Sampling options for [`estimate_q`].
#[derive(Clone, Copy, Debug, Default)]
pub struct QOptions {
    /// Use one reference sample for all perturbations instead of a fresh
    /// one per perturbation.
    pub shared_reference: bool,
}

/// Seeds `(reference, perturbed)` of job `k` under `seed`.
pub fn job_seeds(seed: u64, k: usize, shared_reference: bool) -> (u64, u64) {
    let reference = if shared_reference {
        derive_path(seed, &[SHARED_REFERENCE_TAG])
    } else {
        derive_path(seed, &[k as u64, 0])
    };
    (reference, derive_path(seed, &[k as u64, 1]))
}

fn check_sizes(n_p: usize, n_q: usize) -> Result<()> {
    if n_p < 2 || n_q < 2 {
        return Err(Error::InvalidInput(format!(
            "sample sizes must be at least 2, got n_p = {n_p}, n_q = {n_q}"
        )));
    }
    Ok(())
}

fn model_sample<M: GenerativeModel + ?Sized>(
    model: &M,
    theta: &[f64],
    n: usize,
    seed: u64,
    job: usize,
) -> Result<crate::emst::PointCloud> {
    let wrap = |e: Error| Error::ModelFailure {
        job,
        source: Box::new(e),
    };
    let x = model.sample(theta, n, seed).map_err(wrap)?;
    if x.len() != n || x.dim() != model.output_dim() {
        return Err(wrap(Error::ShapeError(format!(
            "model returned {}×{}, expected {n}×{}",
            x.len(),
            x.dim(),
            model.output_dim()
        ))));
    }
    Ok(x)
}

/// Estimate `Q_k = 2 Dα(p_θ, p_{θ+u_k})` for every direction of `design`.
///
/// Job `k` draws its samples with the seeds of [`job_seeds`], so the result
/// does not depend on how jobs are scheduled across threads.
pub fn estimate_q<M: GenerativeModel + ?Sized>(
    model: &M,
    theta: &[f64],
    design: &PerturbationDesign,
    n_p: usize,
    n_q: usize,
    seed: u64,
    options: QOptions,
) -> Result<QVector> {
    check_sizes(n_p, n_q)?;
    if theta.len() != model.param_dim() || design.dim() != model.param_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.param_dim(),
            actual: if theta.len() != model.param_dim() {
                theta.len()
            } else {
                design.dim()
            },
        });
    }
    let shared = if options.shared_reference {
        let (s, _) = job_seeds(seed, 0, true);
        Some(model_sample(model, theta, n_p, s, 0)?)
    } else {
        None
    };

    let entries: Vec<(f64, QSource)> = design
        .directions()
        .par_iter()
        .enumerate()
        .map(|(k, u)| {
            let (ref_seed, pert_seed) = job_seeds(seed, k, options.shared_reference);
            let fresh;
            let xp = match &shared {
                Some(x) => x,
                None => {
                    fresh = model_sample(model, theta, n_p, ref_seed, k)?;
                    &fresh
                }
            };
            let shifted: Vec<f64> = theta.iter().zip(u).map(|(t, du)| t + du).collect();
            let xq = model_sample(model, &shifted, n_q, pert_seed, k)?;
            let estimate = estimate_divergence(xp, &xq)?;
            Ok((
                2.0 * estimate.d_hat,
                QSource::Sampled {
                    estimate,
                    reference_seed: ref_seed,
                    perturbed_seed: pert_seed,
                },
            ))
        })
        .collect::<Result<_>>()?;

    let (values, sources) = entries.into_iter().unzip();
    Ok(QVector { values, sources })
}

/// One-dimensional least squares `F_ii = Σ Q_k t_k² / Σ t_k⁴`, floored at 0.
pub fn fit_axis(magnitudes: &[f64], q: &[f64]) -> Result<f64> {
    if magnitudes.len() != q.len() || magnitudes.is_empty() {
        return Err(Error::InvalidInput(format!(
            "{} magnitudes for {} Q values",
            magnitudes.len(),
            q.len()
        )));
    }
    let num: f64 = magnitudes.iter().zip(q).map(|(t, q)| q * t * t).sum();
    let den: f64 = magnitudes.iter().map(|t| t.powi(4)).sum();
    Ok((num / den).max(0.0))
}

/// Estimate the FIM diagonal by perturbing one coordinate at a time.
///
/// `magnitudes[i]` lists the perturbation sizes `t` applied along axis `i`.
/// Perturbation `(i, k)` uses seed `derive_path(seed, [i])` with job index
/// `k`.
pub fn diagonal_fim<M: GenerativeModel + ?Sized>(
    model: &M,
    theta: &[f64],
    magnitudes: &[Vec<f64>],
    n_p: usize,
    n_q: usize,
    seed: u64,
    options: QOptions,
) -> Result<Vec<f64>> {
    let d = model.param_dim();
    if magnitudes.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: magnitudes.len(),
        });
    }
    for (i, ts) in magnitudes.iter().enumerate() {
        if ts.is_empty() || ts.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return Err(Error::InvalidInput(format!(
                "axis {i} needs at least one positive perturbation magnitude"
            )));
        }
    }
    (0..d)
        .map(|i| {
            let directions = magnitudes[i]
                .iter()
                .map(|&t| {
                    let mut u = vec![0.0; d];
                    u[i] = t;
                    u
                })
                .collect();
            let design = PerturbationDesign::from_directions(directions)?;
            let q = estimate_q(
                model,
                theta,
                &design,
                n_p,
                n_q,
                derive_path(seed, &[i as u64]),
                options,
            )?;
            fit_axis(&magnitudes[i], q.values())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_magnitude_fit() {
        assert!((fit_axis(&[0.5], &[0.2]).unwrap() - 0.8).abs() < 1e-15);
    }

    #[test]
    fn negative_fit_clamped() {
        assert_eq!(fit_axis(&[0.1, 0.2, 0.3], &[-0.01, -0.02, -0.5]).unwrap(), 0.0);
    }

    #[test]
    fn fit_is_exact_on_quadratic_data() {
        let ts = [0.1, 0.25, 0.4];
        let q: Vec<f64> = ts.iter().map(|t| 1.7 * t * t).collect();
        assert!((fit_axis(&ts, &q).unwrap() - 1.7).abs() < 1e-12);
    }

    #[test]
    fn job_seeds_are_distinct() {
        let (a, b) = job_seeds(1, 0, false);
        let (c, d) = job_seeds(1, 1, false);
        assert!(a != b && a != c && b != d);
        let (s0, _) = job_seeds(1, 0, true);
        let (s1, _) = job_seeds(1, 5, true);
        assert_eq!(s0, s1);
    }
}
