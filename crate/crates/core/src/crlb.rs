//! Cramér-Rao bounds from an estimated FIM.
//!
//! Before inversion the FIM is diagonally loaded with a scaled identity,
//! `F + ε (tr F / d) I` (or `F + ε I` when the trace is not positive). The
//! weighted volume of a bound `C = V D Vᵀ` is `log det(V D W Vᵀ)`.

use crate::error::{Error, Result};
use crate::fim::{FimEstimate, FimMethod};
use crate::linalg::{asymmetry, symmetrize};
use nalgebra::{DMatrix, DVector, SymmetricEigen};

pub const DEFAULT_LOADING: f64 = 1e-3;
const SYMMETRY_TOLERANCE: f64 = 1e-10;

/// The amount added to every eigenvalue by [`regularize_fim`].
pub fn loading_amount(f: &DMatrix<f64>, epsilon: f64) -> f64 {
    let d = f.nrows() as f64;
    let trace = f.trace();
    if trace > 0.0 {
        epsilon * trace / d
    } else {
        epsilon
    }
}

fn check_symmetric(f: &DMatrix<f64>) -> Result<()> {
    if f.nrows() != f.ncols() || f.nrows() == 0 {
        return Err(Error::ShapeError(format!(
            "FIM must be a non-empty square matrix, got {}×{}",
            f.nrows(),
            f.ncols()
        )));
    }
    let scale = f.abs().max().max(1.0);
    if asymmetry(f) > SYMMETRY_TOLERANCE * scale {
        return Err(Error::ShapeError("FIM is not symmetric".into()));
    }
    Ok(())
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidInput(format!("loading must be positive, got {epsilon}")));
    }
    Ok(())
}

pub fn regularize_matrix(f: &DMatrix<f64>, epsilon: f64) -> Result<(DMatrix<f64>, f64)> {
    check_symmetric(f)?;
    check_epsilon(epsilon)?;
    let amount = loading_amount(f, epsilon);
    let mut out = f.clone();
    for i in 0..out.nrows() {
        out[(i, i)] += amount;
    }
    Ok((out, amount))
}

pub fn regularize_fim(f: &FimEstimate, epsilon: f64) -> Result<FimEstimate> {
    let (m, _) = regularize_matrix(f.matrix(), epsilon)?;
    FimEstimate::from_matrix(m, f.method())
}

#[derive(Clone, Debug)]
pub struct CrlbMatrix {
    c_mat: DMatrix<f64>,
    loading_used: f64,
}

impl CrlbMatrix {
    /// Wrap a covariance bound directly; it must be symmetric positive definite.
    pub fn from_matrix(c_mat: DMatrix<f64>) -> Result<Self> {
        check_symmetric(&c_mat)?;
        let min = SymmetricEigen::new(c_mat.clone()).eigenvalues.min();
        if !(min > 0.0) {
            return Err(Error::NumericalFailure(format!(
                "bound matrix is not positive definite (min eigenvalue {min})"
            )));
        }
        Ok(Self {
            c_mat,
            loading_used: 0.0,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.c_mat
    }

    pub fn loading_used(&self) -> f64 {
        self.loading_used
    }

    /// Square roots of the diagonal: per-parameter standard deviation bounds.
    pub fn std_devs(&self) -> Vec<f64> {
        (0..self.c_mat.nrows()).map(|i| self.c_mat[(i, i)].sqrt()).collect()
    }
}

pub fn invert_matrix_to_crlb(f: &DMatrix<f64>, epsilon: f64) -> Result<CrlbMatrix> {
    let (reg, amount) = regularize_matrix(f, epsilon)?;
    let eig = SymmetricEigen::new(reg);
    if let Some(l) = eig.eigenvalues.iter().find(|l| !(**l > 0.0)) {
        return Err(Error::NumericalFailure(format!(
            "regularized FIM has non-positive eigenvalue {l}"
        )));
    }
    let inv = eig.eigenvalues.map(|l| 1.0 / l);
    let v = &eig.eigenvectors;
    let mut c = v * DMatrix::from_diagonal(&inv) * v.transpose();
    symmetrize(&mut c);
    Ok(CrlbMatrix {
        c_mat: c,
        loading_used: amount,
    })
}

/// `C = (F + loading)⁻¹` via the symmetric eigendecomposition.
pub fn invert_to_crlb(f: &FimEstimate, epsilon: f64) -> Result<CrlbMatrix> {
    invert_matrix_to_crlb(f.matrix(), epsilon)
}

/// Diagonal, nonnegative weights.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightMatrix {
    weights: Vec<f64>,
}

impl WeightMatrix {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if let Some(w) = weights.iter().find(|w| !(**w >= 0.0 && w.is_finite())) {
            return Err(Error::InvalidInput(format!("weights must be finite and nonnegative, got {w}")));
        }
        Ok(Self { weights })
    }

    pub fn identity(d: usize) -> Self {
        Self {
            weights: vec![1.0; d],
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_row_slice(&self.weights))
    }
}

/// `log det(V D W Vᵀ)` for `C = V D Vᵀ`. Since `V` is orthonormal this is
/// `Σ log dᵢ + Σ log wᵢ`, which is how it is evaluated.
pub fn weighted_volume(c: &CrlbMatrix, w: &WeightMatrix) -> Result<f64> {
    let d = c.matrix().nrows();
    if w.weights().len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: w.weights().len(),
        });
    }
    if let Some(index) = w.weights().iter().position(|&x| x == 0.0) {
        return Err(Error::SingularWeight { index });
    }
    let eig = SymmetricEigen::new(c.matrix().clone());
    let log_d: f64 = eig.eigenvalues.iter().map(|l| l.ln()).sum();
    let log_w: f64 = w.weights().iter().map(|x| x.ln()).sum();
    Ok(log_d + log_w)
}

/// Convenience: wrap a plain matrix as a FIM estimate.
pub fn fim_from_matrix(m: DMatrix<f64>) -> Result<FimEstimate> {
    check_symmetric(&m)?;
    let mut m = m;
    symmetrize(&mut m);
    FimEstimate::from_matrix(m, FimMethod::PlainLs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_row_slice(v))
    }

    #[test]
    fn loading_examples() {
        let (m, amount) = regularize_matrix(&DMatrix::identity(3, 3), 0.1).unwrap();
        assert!((m - DMatrix::<f64>::identity(3, 3) * 1.1).abs().max() < 1e-15);
        assert!((amount - 0.1).abs() < 1e-15);
        let (m, _) = regularize_matrix(&DMatrix::zeros(2, 2), 0.1).unwrap();
        assert!((m - DMatrix::<f64>::identity(2, 2) * 0.1).abs().max() < 1e-15);
    }

    #[test]
    fn loading_shifts_spectrum() {
        let f = DMatrix::from_row_slice(3, 3, &[2.0, 0.5, -0.3, 0.5, 1.0, 0.2, -0.3, 0.2, 4.0]);
        let eps = 0.05;
        let before = SymmetricEigen::new(f.clone()).eigenvalues;
        let (reg, amount) = regularize_matrix(&f, eps).unwrap();
        assert!((amount - eps * 7.0 / 3.0).abs() < 1e-15);
        let mut b: Vec<f64> = before.iter().copied().collect();
        let mut a: Vec<f64> = SymmetricEigen::new(reg).eigenvalues.iter().copied().collect();
        b.sort_by(f64::total_cmp);
        a.sort_by(f64::total_cmp);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y - amount).abs() < 1e-12);
        }
    }

    #[test]
    fn inversion_examples() {
        let c = invert_matrix_to_crlb(&(DMatrix::<f64>::identity(2, 2) * 2.0), 1e-12).unwrap();
        assert!((c.matrix() - DMatrix::<f64>::identity(2, 2) * 0.5).abs().max() < 1e-10);
        let c = invert_matrix_to_crlb(&diag(&[1.0, 4.0]), 1e-12).unwrap();
        assert!((c.matrix() - diag(&[1.0, 0.25])).abs().max() < 1e-10);
        assert_eq!(c.std_devs().len(), 2);
    }

    #[test]
    fn asymmetric_rejected() {
        let f = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(invert_matrix_to_crlb(&f, 1e-3).is_err());
    }

    #[test]
    fn indefinite_after_loading_fails() {
        let f = diag(&[1.0, -5.0]);
        assert!(matches!(
            invert_matrix_to_crlb(&f, 1e-3),
            Err(Error::NumericalFailure(_))
        ));
    }

    #[test]
    fn volume_examples() {
        let c = CrlbMatrix::from_matrix(DMatrix::identity(3, 3)).unwrap();
        assert!(weighted_volume(&c, &WeightMatrix::identity(3)).unwrap().abs() < 1e-15);
        let c = CrlbMatrix::from_matrix(diag(&[2.0, 5.0])).unwrap();
        let v = weighted_volume(&c, &WeightMatrix::identity(2)).unwrap();
        assert!((v - 10f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn zero_weight_rejected() {
        let c = CrlbMatrix::from_matrix(DMatrix::identity(2, 2)).unwrap();
        let w = WeightMatrix::new(vec![1.0, 0.0]).unwrap();
        assert!(matches!(
            weighted_volume(&c, &w),
            Err(Error::SingularWeight { index: 1 })
        ));
        assert!(WeightMatrix::new(vec![-1.0]).is_err());
    }
}
