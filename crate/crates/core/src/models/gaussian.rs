use super::GenerativeModel;
use crate::emst::PointCloud;
use crate::error::{Error, Result};
use crate::rng::CtrRng;

/// `N(theta, sigma² I)` in `K` dimensions; the parameter is the mean, so
/// `d = K` and the true FIM is `sigma⁻² I`.
///
/// Draws come from stream 0 of `seed`, filled row-major: entry `(i, j)` is
/// `theta[j] + sigma * z[i * K + j]` where `z` is the Box-Muller sequence of
/// [`CtrRng`].
#[derive(Clone, Debug)]
pub struct GaussianMeanModel {
    dim: usize,
    sigma: f64,
}

impl GaussianMeanModel {
    pub fn new(dim: usize, sigma: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("dimension must be at least 1".into()));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidInput(format!("sigma must be positive, got {sigma}")));
        }
        Ok(Self { dim, sigma })
    }

    pub fn standard(dim: usize) -> Result<Self> {
        Self::new(dim, 1.0)
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

impl GenerativeModel for GaussianMeanModel {
    fn param_dim(&self) -> usize {
        self.dim
    }

    fn output_dim(&self) -> usize {
        self.dim
    }

    fn sample(&self, theta: &[f64], n: usize, seed: u64) -> Result<PointCloud> {
        if theta.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: theta.len(),
            });
        }
        if n == 0 {
            return Err(Error::InvalidInput("sample count must be at least 1".into()));
        }
        let mut rng = CtrRng::new(seed, 0);
        let mut data = Vec::with_capacity(n * self.dim);
        for _ in 0..n {
            for &mu in theta {
                data.push(mu + self.sigma * rng.normal());
            }
        }
        PointCloud::new(data, self.dim)
    }
}
