//! Generative models: anything that maps `(theta, n, seed)` to `n` i.i.d.
//! samples in `R^K`.

mod external;
mod gaussian;

pub use external::{ExternalModel, SampleRequest};
pub use gaussian::GaussianMeanModel;

#[cfg(test)]
pub(crate) use external::parse_response as parse_response_for_tests;

use crate::emst::PointCloud;
use crate::error::{Error, Result};
use crate::linalg::{condition_number, symmetrize};
use nalgebra::{DMatrix, SymmetricEigen};

/// Sampling contract of a black-box simulator.
///
/// Implementations must be deterministic: identical `(theta, n, seed)`
/// produce bit-identical output.
pub trait GenerativeModel: Send + Sync {
    fn param_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    fn sample(&self, theta: &[f64], n: usize, seed: u64) -> Result<PointCloud>;
}

impl<M: GenerativeModel + ?Sized> GenerativeModel for &M {
    fn param_dim(&self) -> usize {
        (**self).param_dim()
    }
    fn output_dim(&self) -> usize {
        (**self).output_dim()
    }
    fn sample(&self, theta: &[f64], n: usize, seed: u64) -> Result<PointCloud> {
        (**self).sample(theta, n, seed)
    }
}

impl<M: GenerativeModel + ?Sized> GenerativeModel for Box<M> {
    fn param_dim(&self) -> usize {
        (**self).param_dim()
    }
    fn output_dim(&self) -> usize {
        (**self).output_dim()
    }
    fn sample(&self, theta: &[f64], n: usize, seed: u64) -> Result<PointCloud> {
        (**self).sample(theta, n, seed)
    }
}

/// Condition-number ceiling for the sample covariance.
pub const MAX_COVARIANCE_CONDITION: f64 = 1e12;

/// Unbiased sample covariance (divisor `n - 1`).
pub fn sample_covariance(x: &PointCloud) -> DMatrix<f64> {
    let (n, k) = (x.len(), x.dim());
    let mut mean = vec![0.0; k];
    for row in x.rows() {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut cov = DMatrix::zeros(k, k);
    for row in x.rows() {
        for i in 0..k {
            let di = row[i] - mean[i];
            for j in i..k {
                cov[(i, j)] += di * (row[j] - mean[j]);
            }
        }
    }
    let denom = (n as f64 - 1.0).max(1.0);
    for i in 0..k {
        for j in i..k {
            let v = cov[(i, j)] / denom;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    cov
}

/// Benchmark FIM for a Gaussian family with unknown covariance: the inverse
/// of the sample covariance.
pub fn sample_fim_oracle(x: &PointCloud) -> Result<DMatrix<f64>> {
    if x.len() <= x.dim() {
        return Err(Error::SingularCovariance {
            condition: f64::INFINITY,
        });
    }
    let cov = sample_covariance(x);
    let condition = condition_number(&cov);
    if !(condition <= MAX_COVARIANCE_CONDITION) {
        return Err(Error::SingularCovariance { condition });
    }
    let eig = SymmetricEigen::new(cov);
    let inv = eig.eigenvalues.map(|l| 1.0 / l);
    let v = &eig.eigenvectors;
    let mut out = v * DMatrix::from_diagonal(&inv) * v.transpose();
    symmetrize(&mut out);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_inverts_known_covariance() {
        // Rows ±√2 e_i: zero mean, Σ x_i² = 4 per axis, divisor n - 1 = 3.
        let s = 2f64.sqrt();
        let rows = vec![
            [s, 0.0],
            [-s, 0.0],
            [0.0, s],
            [0.0, -s],
        ];
        let x = PointCloud::from_rows(&rows).unwrap();
        let f = sample_fim_oracle(&x).unwrap();
        let expected = DMatrix::<f64>::identity(2, 2) * 0.75;
        assert!((f - expected).abs().max() < 1e-12);
    }

    #[test]
    fn oracle_two_times_identity() {
        // Rows ±√3 e_i: Σ x_i² = 6 per axis over n - 1 = 3 gives covariance 2I.
        let a = 3f64.sqrt();
        let rows = vec![[a, 0.0], [-a, 0.0], [0.0, a], [0.0, -a]];
        let x = PointCloud::from_rows(&rows).unwrap();
        let cov = sample_covariance(&x);
        assert!((cov.clone() - DMatrix::<f64>::identity(2, 2) * 2.0).abs().max() < 1e-12);
        let f = sample_fim_oracle(&x).unwrap();
        assert!((f - DMatrix::<f64>::identity(2, 2) * 0.5).abs().max() < 1e-12);
    }

    #[test]
    fn oracle_rejects_too_few_rows() {
        let x = PointCloud::from_rows(&[[1.0, 0.0], [0.0, 1.0]]).unwrap();
        assert!(matches!(
            sample_fim_oracle(&x),
            Err(Error::SingularCovariance { .. })
        ));
    }

    #[test]
    fn oracle_rejects_degenerate_cloud() {
        let x = PointCloud::from_rows(&[[1.0, 1.0], [2.0, 2.0], [3.0, 3.0], [4.0, 4.0]]).unwrap();
        assert!(matches!(
            sample_fim_oracle(&x),
            Err(Error::SingularCovariance { .. })
        ));
    }
}
