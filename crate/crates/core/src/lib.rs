//! Fisher information estimation for black-box generative models, without
//! density estimation.
//!
//! The pipeline:
//!
//! 1. [`emst`] builds exact Euclidean minimum spanning trees over pooled
//!    samples and counts edges joining the two samples (the Friedman-Rafsky
//!    statistic).
//! 2. [`divergence`] turns that count into an estimate of the α-divergence
//!    `Dα(p, q)`.
//! 3. [`fim`] perturbs the parameter in `M` directions, estimates
//!    `Q_k = 2 Dα(p_θ, p_{θ+u_k}) ≈ u_kᵀ F u_k`, and solves for `F` by least
//!    squares, optionally with the diagonal pinned and `F ⪰ 0` enforced.
//! 4. [`crlb`] inverts a (diagonally loaded) FIM into a Cramér-Rao bound and
//!    computes weighted log-determinant volumes.
//!
//! [`models`] defines the sampling contract, including an adapter for
//! simulators that run as external processes, and [`experiments`] runs the
//! Gaussian Monte Carlo replications.
//!
//! ```
//! use fimest::emst::PointCloud;
//! use fimest::divergence::estimate_divergence;
//!
//! let xp = PointCloud::from_scalars(&[0.0, 2.0]).unwrap();
//! let xq = PointCloud::from_scalars(&[1.0, 3.0]).unwrap();
//! let e = estimate_divergence(&xp, &xq).unwrap();
//! assert_eq!(e.c, 3);
//! assert_eq!(e.d_hat, -0.5);
//! ```

pub mod cli;
pub mod crlb;
pub mod divergence;
pub mod emst;
mod error;
pub mod experiments;
pub mod fim;
pub mod linalg;
pub mod models;
pub mod quadrature;
pub mod rng;

pub use error::{Error, Result};
