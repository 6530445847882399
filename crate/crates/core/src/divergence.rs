//! The α-divergence `Dα` estimated from cross-edge counts, plus quadrature
//! routines that evaluate it (and the Henze-Penrose affinity `Aα`) for known
//! one-dimensional densities.
//!
//! For samples of sizes `n_p`, `n_q` the estimate is
//!
//! ```text
//! d_hat = 1 - C (n_p + n_q) / (2 n_p n_q),      α = n_p / (n_p + n_q)
//! ```
//!
//! which converges to
//!
//! ```text
//! Dα(p, q) = 1/(4α(1-α)) [ ∫ (αp - (1-α)q)² / (αp + (1-α)q) dx - (2α - 1)² ]
//! ```
//!
//! The estimate is not clamped: at finite sample sizes it can be negative,
//! and least-squares fitting downstream relies on that noise being unbiased.

use crate::emst::{fr_statistic, PointCloud};
use crate::error::{Error, Result};
use crate::quadrature::integrate;
use serde::Serialize;

/// Absolute tolerance of the quadrature oracles.
pub const QUADRATURE_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DivergenceEstimate {
    pub d_hat: f64,
    #[serde(rename = "C")]
    pub c: usize,
    pub n_p: usize,
    pub n_q: usize,
    pub alpha: f64,
}

impl DivergenceEstimate {
    pub fn from_counts(c: usize, n_p: usize, n_q: usize) -> Self {
        let (np, nq) = (n_p as f64, n_q as f64);
        Self {
            d_hat: 1.0 - c as f64 * (np + nq) / (2.0 * np * nq),
            c,
            n_p,
            n_q,
            alpha: np / (np + nq),
        }
    }

    /// The estimate floored at 0. Only for standalone reporting; never feed
    /// clamped values into a regression.
    pub fn clamped(mut self) -> Self {
        self.d_hat = self.d_hat.clamp(0.0, 1.0);
        self
    }
}

pub fn estimate_divergence(xp: &PointCloud, xq: &PointCloud) -> Result<DivergenceEstimate> {
    let fr = fr_statistic(xp, xq)?;
    Ok(DivergenceEstimate::from_counts(fr.cross_edges, fr.n_p, fr.n_q))
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::DomainError(format!("alpha = {alpha} is outside (0, 1)")));
    }
    Ok(())
}

/// The convex generator `f` with `Dα(p, q) = ∫ f(p/q) q dx`.
pub fn f_weight(t: f64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !(t > 0.0) {
        return Err(Error::DomainError(format!("f is defined for t > 0, got {t}")));
    }
    let beta = 1.0 - alpha;
    let num = alpha * t - beta;
    let den = alpha * t + beta;
    Ok((num * (num / den) - (2.0 * alpha - 1.0).powi(2)) / (4.0 * alpha * beta))
}

/// A pair of one-dimensional densities on a bounded interval.
pub struct DensityPair1D {
    p: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    q: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    lo: f64,
    hi: f64,
}

impl std::fmt::Debug for DensityPair1D {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DensityPair1D")
            .field("lo", &self.lo)
            .field("hi", &self.hi)
            .finish_non_exhaustive()
    }
}

fn normal_pdf(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    (-0.5 * z * z).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt())
}

impl DensityPair1D {
    /// Validates that both densities are nonnegative on a grid and integrate
    /// to one within the quadrature tolerance.
    pub fn new<P, Q>(p: P, q: Q, lo: f64, hi: f64) -> Result<Self>
    where
        P: Fn(f64) -> f64 + Send + Sync + 'static,
        Q: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidInput(format!("bad interval [{lo}, {hi}]")));
        }
        for (name, g) in [("p", &p as &dyn Fn(f64) -> f64), ("q", &q)] {
            for i in 0..=1000 {
                let x = lo + (hi - lo) * i as f64 / 1000.0;
                if !(g(x) >= 0.0) {
                    return Err(Error::InvalidInput(format!("density {name} is negative at {x}")));
                }
            }
            let mass = integrate(g, lo, hi, 1e-9)?;
            if (mass - 1.0).abs() > QUADRATURE_TOLERANCE {
                return Err(Error::InvalidInput(format!(
                    "density {name} integrates to {mass} on [{lo}, {hi}]"
                )));
            }
        }
        Ok(Self {
            p: Box::new(p),
            q: Box::new(q),
            lo,
            hi,
        })
    }

    /// Two normal densities, integrated over a window reaching 10 standard
    /// deviations past both means.
    pub fn gaussians(mean_p: f64, sd_p: f64, mean_q: f64, sd_q: f64) -> Result<Self> {
        if !(sd_p > 0.0 && sd_q > 0.0) {
            return Err(Error::InvalidInput("standard deviations must be positive".into()));
        }
        let lo = (mean_p - 10.0 * sd_p).min(mean_q - 10.0 * sd_q);
        let hi = (mean_p + 10.0 * sd_p).max(mean_q + 10.0 * sd_q);
        Self::new(
            move |x| normal_pdf(x, mean_p, sd_p),
            move |x| normal_pdf(x, mean_q, sd_q),
            lo,
            hi,
        )
    }

    pub fn p(&self, x: f64) -> f64 {
        (self.p)(x)
    }

    pub fn q(&self, x: f64) -> f64 {
        (self.q)(x)
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }
}

// The integrand tolerance is tighter than the reported one so that the
// result is safely within QUADRATURE_TOLERANCE.
const INNER_TOLERANCE: f64 = 1e-9;

/// `Dα(p, q)` by direct quadrature of its defining integral.
pub fn divergence_quadrature(pair: &DensityPair1D, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let beta = 1.0 - alpha;
    let integral = integrate(
        |x| {
            let (p, q) = (pair.p(x), pair.q(x));
            let den = alpha * p + beta * q;
            if den <= 0.0 {
                0.0
            } else {
                (alpha * p - beta * q).powi(2) / den
            }
        },
        pair.lo,
        pair.hi,
        INNER_TOLERANCE,
    )?;
    Ok((integral - (2.0 * alpha - 1.0).powi(2)) / (4.0 * alpha * beta))
}

/// `Dα(p, q)` as the f-divergence `∫ f(p/q) q dx`. Where `q` vanishes the
/// integrand takes its limit `α p / (4α(1-α))`.
pub fn divergence_f_form_quadrature(pair: &DensityPair1D, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let beta = 1.0 - alpha;
    let c = 1.0 / (4.0 * alpha * beta);
    integrate(
        |x| {
            let (p, q) = (pair.p(x), pair.q(x));
            if q <= f64::MIN_POSITIVE {
                return c * alpha * p;
            }
            if p <= 0.0 {
                // f(t) -> c [ (1-α) - (2α-1)² ] as t -> 0
                return c * (beta - (2.0 * alpha - 1.0).powi(2)) * q;
            }
            f_weight(p / q, alpha).unwrap_or(0.0) * q
        },
        pair.lo,
        pair.hi,
        INNER_TOLERANCE,
    )
}

/// Henze-Penrose affinity `Aα(p, q) = 2α(1-α) ∫ p q / (αp + (1-α)q) dx`,
/// the almost-sure limit of `C / (n_p + n_q)`.
pub fn a_alpha_quadrature(pair: &DensityPair1D, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let beta = 1.0 - alpha;
    let integral = integrate(
        |x| {
            let (p, q) = (pair.p(x), pair.q(x));
            let den = alpha * p + beta * q;
            if den <= 0.0 {
                0.0
            } else {
                p * q / den
            }
        },
        pair.lo,
        pair.hi,
        INNER_TOLERANCE,
    )?;
    Ok(2.0 * alpha * beta * integral)
}
