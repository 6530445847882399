use super::vecmat::{off_diagonal_pairs, vec_len};
use crate::error::{Error, Result};
use crate::linalg::condition_number;
use crate::rng::CtrRng;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Largest admissible condition number of `UᵀU`.
pub const MAX_NORMAL_CONDITION: f64 = 1e12;

/// How perturbation directions are drawn.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum PerturbationLaw {
    /// Uniform in the ball of the given radius.
    Ball { radius: f64 },
    /// Independent `N(0, sigma²)` components.
    Gaussian { sigma: f64 },
}

impl PerturbationLaw {
    fn validate(&self) -> Result<()> {
        let s = match *self {
            PerturbationLaw::Ball { radius } => radius,
            PerturbationLaw::Gaussian { sigma } => sigma,
        };
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::InvalidInput(format!("perturbation scale must be positive, got {s}")));
        }
        Ok(())
    }

    pub fn scale(&self) -> f64 {
        match *self {
            PerturbationLaw::Ball { radius } => radius,
            PerturbationLaw::Gaussian { sigma } => sigma,
        }
    }

    /// One `d`-dimensional direction.
    pub fn draw(&self, d: usize, rng: &mut CtrRng) -> Vec<f64> {
        match *self {
            PerturbationLaw::Gaussian { sigma } => (0..d).map(|_| sigma * rng.normal()).collect(),
            PerturbationLaw::Ball { radius } => {
                let mut v: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                let r = radius * rng.uniform().powf(1.0 / d as f64);
                v.iter_mut().for_each(|x| *x *= r / norm);
                v
            }
        }
    }
}

/// The row `[u1², …, ud², 2u1u2, …, 2u(d-1)ud]` with `row · vec(F) = uᵀFu`.
pub fn design_row(u: &[f64]) -> Vec<f64> {
    let d = u.len();
    let mut row = Vec::with_capacity(vec_len(d));
    row.extend(u.iter().map(|x| x * x));
    row.extend(off_diagonal_pairs(d).map(|(i, j)| 2.0 * u[i] * u[j]));
    row
}

/// Perturbation directions `u_k` and the design matrix `U` built from them.
#[derive(Clone, Debug)]
pub struct PerturbationDesign {
    dim: usize,
    directions: Vec<Vec<f64>>,
    matrix: DMatrix<f64>,
    seed: Option<u64>,
}

impl PerturbationDesign {
    /// Build from explicit directions. The rank of `U` is not checked here;
    /// solvers check conditioning themselves.
    pub fn from_directions(directions: Vec<Vec<f64>>) -> Result<Self> {
        let dim = directions
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::InvalidInput("at least one direction is required".into()))?;
        if dim == 0 {
            return Err(Error::InvalidInput("parameter dimension must be at least 1".into()));
        }
        let p = vec_len(dim);
        let mut matrix = DMatrix::zeros(directions.len(), p);
        for (k, u) in directions.iter().enumerate() {
            if u.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: u.len(),
                });
            }
            if u.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFiniteInput { row: k, col: 0 });
            }
            for (c, v) in design_row(u).into_iter().enumerate() {
                matrix[(k, c)] = v;
            }
        }
        Ok(Self {
            dim,
            directions,
            matrix,
            seed: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    pub fn directions(&self) -> &[Vec<f64>] {
        &self.directions
    }

    /// The `M × d(d+1)/2` design matrix `U`.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// Condition number of `UᵀU` (infinite when singular or `M < d(d+1)/2`).
    pub fn normal_condition(&self) -> f64 {
        if self.len() < vec_len(self.dim) {
            return f64::INFINITY;
        }
        condition_number(&(self.matrix.transpose() * &self.matrix))
    }

    pub fn check_rank(&self) -> Result<()> {
        let condition = self.normal_condition();
        if condition <= MAX_NORMAL_CONDITION {
            Ok(())
        } else {
            Err(Error::RankDeficient { condition })
        }
    }
}

/// Draw `m` directions uniformly in the ball of `radius` in `R^d`.
pub fn sample_perturbations(d: usize, m: usize, radius: f64, seed: u64) -> Result<PerturbationDesign> {
    sample_perturbations_with(d, m, PerturbationLaw::Ball { radius }, seed)
}

/// Draw `m` directions from `law`. Attempt `a` uses stream `a` of `seed`; a
/// rank-deficient first draw is retried once on stream 1.
pub fn sample_perturbations_with(
    d: usize,
    m: usize,
    law: PerturbationLaw,
    seed: u64,
) -> Result<PerturbationDesign> {
    if d == 0 {
        return Err(Error::InvalidInput("parameter dimension must be at least 1".into()));
    }
    if m < vec_len(d) {
        return Err(Error::InvalidInput(format!(
            "need at least {} perturbations for d = {d}, got {m}",
            vec_len(d)
        )));
    }
    law.validate()?;
    let mut last = Error::RankDeficient {
        condition: f64::INFINITY,
    };
    for attempt in 0..2 {
        let mut rng = CtrRng::new(seed, attempt);
        let directions = (0..m).map(|_| law.draw(d, &mut rng)).collect();
        let mut design = PerturbationDesign::from_directions(directions)?;
        design.seed = Some(seed);
        match design.check_rank() {
            Ok(()) => return Ok(design),
            Err(e) => last = e,
        }
    }
    Err(last)
}
