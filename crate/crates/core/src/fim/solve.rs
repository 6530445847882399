//! Solvers for `Q ≈ U · vec(F)`.

use super::design::{PerturbationDesign, MAX_NORMAL_CONDITION};
use super::q::QVector;
use super::vecmat::{mat_fim, off_diagonal_pairs, vec_fim};
use crate::error::{Error, Result};
use crate::linalg::min_eigenvalue;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FimMethod {
    PlainLs,
    PsdConstrained,
}

#[derive(Clone, Debug, Serialize)]
pub struct Diagnostics {
    /// `‖U vec(F) - Q‖₂`.
    pub residual_norm: f64,
    pub min_eigenvalue: f64,
    pub iterations: usize,
}

#[derive(Clone, Debug)]
pub struct FimEstimate {
    f_vec: Vec<f64>,
    f_mat: DMatrix<f64>,
    method: FimMethod,
    diagnostics: Diagnostics,
}

impl FimEstimate {
    /// Wrap a symmetric matrix (used for FIMs read from disk).
    pub fn from_matrix(f_mat: DMatrix<f64>, method: FimMethod) -> Result<Self> {
        let f_vec = vec_fim(&f_mat)?;
        let min_eigenvalue = min_eigenvalue(&f_mat);
        Ok(Self {
            f_vec,
            f_mat,
            method,
            diagnostics: Diagnostics {
                residual_norm: f64::NAN,
                min_eigenvalue,
                iterations: 0,
            },
        })
    }

    fn from_vec(f_vec: Vec<f64>, method: FimMethod, design: &PerturbationDesign, q: &QVector, iterations: usize) -> Result<Self> {
        let f_mat = mat_fim(&f_vec)?;
        let residual_norm = residual(design, q, &f_vec).norm();
        let min_eigenvalue = min_eigenvalue(&f_mat);
        Ok(Self {
            f_vec,
            f_mat,
            method,
            diagnostics: Diagnostics {
                residual_norm,
                min_eigenvalue,
                iterations,
            },
        })
    }

    pub fn f_vec(&self) -> &[f64] {
        &self.f_vec
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.f_mat
    }

    pub fn dim(&self) -> usize {
        self.f_mat.nrows()
    }

    pub fn method(&self) -> FimMethod {
        self.method
    }

    pub fn diagnostics(&self) -> &Diagnostics {
        &self.diagnostics
    }

    /// Least-squares objective `‖U vec(F) - Q‖²`.
    pub fn objective(&self, design: &PerturbationDesign, q: &QVector) -> f64 {
        residual(design, q, &self.f_vec).norm_squared()
    }
}

fn residual(design: &PerturbationDesign, q: &QVector, f_vec: &[f64]) -> DVector<f64> {
    design.matrix() * DVector::from_row_slice(f_vec) - DVector::from_row_slice(q.values())
}

/// `‖U f - Q‖²` for an arbitrary vectorized FIM.
pub fn ls_objective(design: &PerturbationDesign, q: &QVector, f_vec: &[f64]) -> f64 {
    residual(design, q, f_vec).norm_squared()
}

fn check_shapes(design: &PerturbationDesign, q: &QVector) -> Result<()> {
    if design.len() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: design.len(),
            actual: q.len(),
        });
    }
    Ok(())
}

/// Unconstrained least squares `(UᵀU)⁻¹UᵀQ`, computed through the SVD of
/// `U`. The result need not be positive semidefinite.
pub fn ls_fim(design: &PerturbationDesign, q: &QVector) -> Result<FimEstimate> {
    check_shapes(design, q)?;
    let f = lstsq(design.matrix(), &DVector::from_row_slice(q.values()))?;
    FimEstimate::from_vec(f.as_slice().to_vec(), FimMethod::PlainLs, design, q, 0)
}

fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    if a.nrows() < a.ncols() {
        return Err(Error::SingularNormalEquations {
            condition: f64::INFINITY,
        });
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition = if smin > 0.0 {
        (smax / smin).powi(2)
    } else {
        f64::INFINITY
    };
    if !(condition <= MAX_NORMAL_CONDITION) {
        return Err(Error::SingularNormalEquations { condition });
    }
    svd.solve(b, 0.0).map_err(|e| Error::NumericalFailure(e.to_string()))
}

/// Iteration cap of the projected-gradient solver.
pub const PSD_MAX_ITERATIONS: usize = 50_000;
const STEP_TOLERANCE: f64 = 1e-13;
const OBJECTIVE_TOLERANCE: f64 = 1e-10;
const STALL_ITERATIONS: usize = 200;
const NEWTON_TOLERANCE: f64 = 1e-13;
const NEWTON_MAX_ITERATIONS: usize = 500;

/// Least squares with the diagonal pinned to `diag_targets` and the matrix
/// constrained to the PSD cone.
///
/// Rows whose target is 0 are forced to zero, since a PSD matrix with a zero
/// diagonal entry has a zero row. The remaining off-diagonal entries are
/// written as `F_ij = sqrt(t_i t_j) ρ_ij`, which turns the feasible set into
/// the correlation matrices `{diag(R) = 1, R ⪰ 0}` whatever the scale of the
/// targets. The problem is then solved by accelerated projected gradient in
/// `ρ`, projecting with a dual Newton method for the nearest correlation
/// matrix.
pub fn psd_constrained_fim(
    design: &PerturbationDesign,
    q: &QVector,
    diag_targets: &[f64],
) -> Result<FimEstimate> {
    check_shapes(design, q)?;
    let d = design.dim();
    if diag_targets.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: diag_targets.len(),
        });
    }
    if let Some(t) = diag_targets.iter().find(|t| !(**t >= 0.0 && t.is_finite())) {
        return Err(Error::InvalidInput(format!(
            "diagonal targets must be finite and nonnegative, got {t}"
        )));
    }

    // Fix the diagonal and every pair touching a zero-target row; the rest
    // are the free variables.
    let pairs: Vec<(usize, usize)> = off_diagonal_pairs(d).collect();
    let free: Vec<usize> = pairs
        .iter()
        .enumerate()
        .filter(|(_, &(i, j))| diag_targets[i] > 0.0 && diag_targets[j] > 0.0)
        .map(|(c, _)| c)
        .collect();
    let active: Vec<usize> = (0..d).filter(|&i| diag_targets[i] > 0.0).collect();

    let u = design.matrix();
    let qv = DVector::from_row_slice(q.values());
    let fixed = DVector::from_iterator(
        u.ncols(),
        diag_targets.iter().copied().chain(std::iter::repeat(0.0)).take(u.ncols()),
    );
    let r0 = &qv - u * &fixed;
    let scale: Vec<f64> = free
        .iter()
        .map(|&c| {
            let (i, j) = pairs[c];
            (diag_targets[i] * diag_targets[j]).sqrt()
        })
        .collect();

    let assemble = |rho: &DVector<f64>| -> Vec<f64> {
        let mut f = fixed.as_slice().to_vec();
        for ((v, &c), s) in rho.iter().zip(&free).zip(&scale) {
            f[d + c] = v * s;
        }
        f
    };

    if free.is_empty() {
        let f = assemble(&DVector::zeros(0));
        return FimEstimate::from_vec(f, FimMethod::PsdConstrained, design, q, 0);
    }

    let a = DMatrix::from_fn(u.nrows(), free.len(), |r, c| u[(r, d + free[c])] * scale[c]);
    let ata = a.transpose() * &a;
    let atb = a.transpose() * &r0;
    let lipschitz = SymmetricEigen::new(ata.clone()).eigenvalues.max();
    if !(lipschitz > 0.0) {
        return Err(Error::SingularNormalEquations {
            condition: f64::INFINITY,
        });
    }

    let local: Vec<(usize, usize)> = free
        .iter()
        .map(|&c| {
            let (i, j) = pairs[c];
            (
                active.iter().position(|&x| x == i).unwrap(),
                active.iter().position(|&x| x == j).unwrap(),
            )
        })
        .collect();
    let projector = Projector {
        n: active.len(),
        local: &local,
    };

    let objective = |x: &DVector<f64>| 0.5 * (&a * x - &r0).norm_squared();
    let gradient = |x: &DVector<f64>| &ata * x - &atb;

    // Warm start from the unconstrained minimizer with the diagonal fixed;
    // when it is already PSD it is the answer.
    let start = match ata.clone().cholesky() {
        Some(ch) => ch.solve(&atb),
        None => DVector::zeros(free.len()),
    };
    let mut x = projector.project(&start)?;
    if (&x - &start).norm() <= STEP_TOLERANCE * (1.0 + start.norm()) {
        return FimEstimate::from_vec(assemble(&start), FimMethod::PsdConstrained, design, q, 0);
    }

    let mut y = x.clone();
    let mut t = 1.0f64;
    let mut fx = objective(&x);
    // Projections of points far outside the set carry rounding error of
    // order ε‖x‖, which can keep the iterates jittering above the step
    // tolerance; stop once the best objective has stalled.
    let mut best = (fx, x.clone());
    let mut stale = 0;
    for it in 1..=PSD_MAX_ITERATIONS {
        let step = &y - gradient(&y) / lipschitz;
        let x_new = projector.project(&step)?;
        let f_new = objective(&x_new);
        if f_new > fx && t > 1.0 {
            // Momentum overshot: restart from the last iterate. Without
            // momentum the step is a plain projected-gradient step and is
            // accepted even if rounding in the projection raised the
            // objective slightly.
            y = x.clone();
            t = 1.0;
            continue;
        }
        let t_new = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        y = &x_new + (&x_new - &x) * ((t - 1.0) / t_new);
        let moved = (&x_new - &x).norm();
        let rel_change = (fx - f_new).abs() / fx.abs().max(f64::MIN_POSITIVE);
        x = x_new;
        fx = f_new;
        t = t_new;
        if fx < best.0 * (1.0 - 1e-12) {
            best = (fx, x.clone());
            stale = 0;
        } else {
            stale += 1;
            if stale >= STALL_ITERATIONS {
                return FimEstimate::from_vec(assemble(&best.1), FimMethod::PsdConstrained, design, q, it);
            }
        }
        if moved <= STEP_TOLERANCE * (1.0 + x.norm()) || (rel_change < OBJECTIVE_TOLERANCE && moved <= 1e-9 * (1.0 + x.norm())) {
            return FimEstimate::from_vec(assemble(&x), FimMethod::PsdConstrained, design, q, it);
        }
    }
    Err(Error::NonConvergence {
        iterations: PSD_MAX_ITERATIONS,
    })
}

/// Frobenius projection onto the correlation matrices, in the coordinates
/// of the free off-diagonal entries.
struct Projector<'a> {
    n: usize,
    local: &'a [(usize, usize)],
}

impl Projector<'_> {
    fn to_matrix(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let mut m = DMatrix::identity(self.n, self.n);
        for (v, &(i, j)) in x.iter().zip(self.local) {
            m[(i, j)] = *v;
            m[(j, i)] = *v;
        }
        m
    }

    fn from_matrix(&self, m: &DMatrix<f64>) -> DVector<f64> {
        DVector::from_iterator(self.local.len(), self.local.iter().map(|&(i, j)| m[(i, j)]))
    }

    fn project(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let g = self.to_matrix(x);
        if min_eigenvalue(&g) >= 0.0 {
            return Ok(x.clone());
        }
        let r = nearest_correlation(&g);
        Ok(self.from_matrix(&shrink_to_psd(r)))
    }
}

/// `P(G + diag(y))`, the PSD part of a symmetric matrix, with the
/// eigendecomposition it came from.
fn psd_part(m: DMatrix<f64>) -> (DMatrix<f64>, SymmetricEigen<f64, nalgebra::Dyn>) {
    let eig = SymmetricEigen::new(m);
    let v = &eig.eigenvectors;
    let clipped = eig.eigenvalues.map(|l| l.max(0.0));
    let mut p = v * DMatrix::from_diagonal(&clipped) * v.transpose();
    crate::linalg::symmetrize(&mut p);
    (p, eig)
}

/// Nearest correlation matrix to the symmetric `g` in Frobenius norm, by
/// semismooth Newton on the dual `θ(y) = ½‖P(G + diag y)‖² - Σ y`, whose
/// gradient is `diag(P(G + diag y)) - 1`. Stops early, with the current
/// iterate, when rounding prevents further progress.
fn nearest_correlation(g: &DMatrix<f64>) -> DMatrix<f64> {
    let n = g.nrows();
    let theta = |p: &DMatrix<f64>, y: &DVector<f64>| 0.5 * p.norm_squared() - y.sum();
    let with_dual = |y: &DVector<f64>| {
        let mut m = g.clone();
        for i in 0..n {
            m[(i, i)] += y[i];
        }
        psd_part(m)
    };

    let tolerance = NEWTON_TOLERANCE * (1.0 + g.amax());
    let mut y = DVector::zeros(n);
    let (mut p, mut eig) = with_dual(&y);
    let mut value = theta(&p, &y);
    for _ in 0..NEWTON_MAX_ITERATIONS {
        let grad = DVector::from_fn(n, |i, _| p[(i, i)] - 1.0);
        if grad.amax() <= tolerance {
            return unit_diagonal(p);
        }

        // Generalized Jacobian V_ij = Σ_ab Ω_ab P_ia P_ja P_ib P_jb.
        let lambda = &eig.eigenvalues;
        let pv = &eig.eigenvectors;
        let omega = DMatrix::from_fn(n, n, |a, b| {
            let (la, lb) = (lambda[a], lambda[b]);
            match (la > 0.0, lb > 0.0) {
                (true, true) => 1.0,
                (false, false) => 0.0,
                (true, false) => la / (la - lb),
                (false, true) => lb / (lb - la),
            }
        });
        let mut jac = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let w = DVector::from_fn(n, |a, _| pv[(i, a)] * pv[(j, a)]);
                let v = (w.transpose() * &omega * &w)[(0, 0)];
                jac[(i, j)] = v;
                jac[(j, i)] = v;
            }
        }
        // Levenberg-Marquardt regularization: V can be singular away from
        // the solution.
        let mu = grad.norm().min(1e-2);
        for i in 0..n {
            jac[(i, i)] += mu;
        }
        let h = match jac.clone().cholesky() {
            Some(ch) => ch.solve(&(-&grad)),
            None => -&grad,
        };

        // Backtracking: accept on sufficient decrease of θ, or of the
        // gradient norm when θ has lost its precision to cancellation.
        let slope = grad.dot(&h);
        let grad_norm = grad.norm();
        let mut step = 1.0;
        loop {
            let y_try = &y + &h * step;
            let (p_try, eig_try) = with_dual(&y_try);
            let v_try = theta(&p_try, &y_try);
            let g_try = (0..n).map(|i| (p_try[(i, i)] - 1.0).powi(2)).sum::<f64>().sqrt();
            if v_try <= value + 1e-4 * step * slope || g_try <= (1.0 - 1e-4 * step) * grad_norm {
                y = y_try;
                p = p_try;
                eig = eig_try;
                value = v_try;
                break;
            }
            if step < 1e-10 {
                // No representable progress: P is as close as rounding allows.
                return unit_diagonal(p);
            }
            step *= 0.5;
        }
    }
    unit_diagonal(p)
}

fn unit_diagonal(mut r: DMatrix<f64>) -> DMatrix<f64> {
    for i in 0..r.nrows() {
        r[(i, i)] = 1.0;
    }
    r
}

/// Remove a residual negative eigenvalue from a unit-diagonal matrix: with
/// `λ = λmin(R) < 0`, `(R - λI) / (1 - λ)` has unit diagonal and is PSD.
/// Only the off-diagonal entries change, by the factor `1 / (1 - λ)`.
fn shrink_to_psd(mut r: DMatrix<f64>) -> DMatrix<f64> {
    let lambda = min_eigenvalue(&r);
    if lambda < 0.0 {
        let factor = 1.0 / (1.0 - lambda);
        for i in 0..r.nrows() {
            for j in 0..r.ncols() {
                if i != j {
                    r[(i, j)] *= factor;
                }
            }
        }
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    fn design2(dirs: &[[f64; 2]]) -> PerturbationDesign {
        PerturbationDesign::from_directions(dirs.iter().map(|d| d.to_vec()).collect()).unwrap()
    }

    #[test]
    fn one_dimensional_ls() {
        let design = PerturbationDesign::from_directions(vec![vec![0.5]]).unwrap();
        let f = ls_fim(&design, &QVector::synthetic(vec![0.2])).unwrap();
        assert!((f.f_vec()[0] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn negative_q_gives_indefinite_ls() {
        let design = PerturbationDesign::from_directions(vec![vec![1.0]]).unwrap();
        let f = ls_fim(&design, &QVector::synthetic(vec![-1.0])).unwrap();
        assert!((f.f_vec()[0] + 1.0).abs() < 1e-15);
        assert!(f.diagnostics().min_eigenvalue < 0.0);
    }

    #[test]
    fn singular_normal_equations() {
        let design = design2(&[[1.0, 1.0], [1.0, 1.0], [2.0, 2.0]]);
        let q = QVector::synthetic(vec![1.0, 1.0, 4.0]);
        assert!(matches!(
            ls_fim(&design, &q),
            Err(Error::SingularNormalEquations { .. })
        ));
    }

    #[test]
    fn psd_equals_ls_when_constraints_inactive() {
        let design = design2(&[[1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, -0.5]]);
        let truth = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let q = QVector::from_quadratic_form(&design, &truth);
        let ls = ls_fim(&design, &q).unwrap();
        let psd = psd_constrained_fim(&design, &q, &[ls.f_vec()[0], ls.f_vec()[1]]).unwrap();
        for (a, b) in ls.f_vec().iter().zip(psd.f_vec()) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn psd_clips_off_diagonal_to_boundary() {
        // Unconstrained off-diagonal is 1.5 with unit diagonal; the PSD
        // boundary is |F12| ≤ 1.
        let design = design2(&[[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]);
        let q = QVector::synthetic(vec![1.0, 1.0, 1.0 + 1.0 + 2.0 * 1.5]);
        let ls = ls_fim(&design, &q).unwrap();
        assert!((ls.f_vec()[2] - 1.5).abs() < 1e-12);
        let psd = psd_constrained_fim(&design, &q, &[1.0, 1.0]).unwrap();
        assert!((psd.f_vec()[2] - 1.0).abs() < 1e-8, "{:?}", psd.f_vec());
        assert!(psd.diagnostics().min_eigenvalue >= -1e-8);
    }

    #[test]
    fn zero_targets_give_zero_matrix() {
        let design = design2(&[[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]);
        let q = QVector::synthetic(vec![1.0, 2.0, 7.0]);
        let psd = psd_constrained_fim(&design, &q, &[0.0, 0.0]).unwrap();
        assert!(psd.matrix().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn negative_targets_rejected() {
        let design = design2(&[[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]);
        let q = QVector::synthetic(vec![1.0, 2.0, 7.0]);
        assert!(psd_constrained_fim(&design, &q, &[-1.0, 1.0]).is_err());
    }
}
