//! The graph-based divergence estimate against numerical quadrature for two
//! unit-variance normals.

use fimest::divergence::{divergence_quadrature, estimate_divergence, DensityPair1D};
use fimest::models::{GaussianMeanModel, GenerativeModel};
use fimest::rng::derive_path;

fn main() -> fimest::Result<()> {
    let model = GaussianMeanModel::standard(1)?;
    let n = 2000;
    let seeds = 10;
    println!("{:>6} {:>10} {:>10}", "shift", "quadrature", "estimate");
    for shift in [0.0, 0.5, 1.0, 2.0] {
        let truth = divergence_quadrature(&DensityPair1D::gaussians(0.0, 1.0, shift, 1.0)?, 0.5)?;
        let mut mean = 0.0;
        for s in 0..seeds {
            let xp = model.sample(&[0.0], n, derive_path(7, &[s, 0]))?;
            let xq = model.sample(&[shift], n, derive_path(7, &[s, 1]))?;
            mean += estimate_divergence(&xp, &xq)?.d_hat / seeds as f64;
        }
        println!("{shift:>6.1} {truth:>10.5} {mean:>10.5}");
    }
    Ok(())
}
