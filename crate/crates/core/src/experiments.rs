//! Monte Carlo replications on the Gaussian mean model.
//!
//! Each job `(K, n, run)` draws a Gaussian perturbation design, estimates the
//! FIM by plain least squares on `Q = 2 d_hat`, and compares it, as does the
//! inverse sample covariance, against the true FIM `I`. Job seeds depend only
//! on `(master_seed, K, run)`, so cells that differ only in `n` share their
//! perturbation directions.

use crate::error::{Error, Result};
use crate::fim::{estimate_q, ls_fim, sample_perturbations_with, vec_len, PerturbationLaw, QOptions};
use crate::linalg::frobenius_distance2;
use crate::models::{sample_fim_oracle, GaussianMeanModel, GenerativeModel};
use crate::rng::derive_path;
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

pub const DEFAULT_SEED: u64 = 20_150_601;
pub const CSV_HEADER: &str = "K,n,run,mse_dhalf,mse_sample";

fn default_seed() -> u64 {
    DEFAULT_SEED
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dims: Vec<usize>,
    pub n_samples: Vec<usize>,
    /// Per-component variance of the Gaussian perturbations.
    pub sigma_u2: f64,
    /// `M = m_factor · K(K+1)/2`.
    pub m_factor: usize,
    pub monte_carlo_runs: usize,
    #[serde(default = "default_seed")]
    pub master_seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Full-scale MSE-versus-dimension sweep (K = 4..14, N = 1000, 50× oversampled, 25 runs).
    pub fn full_mse_vs_dim() -> Self {
        Self {
            dims: (4..=14).collect(),
            n_samples: vec![1000],
            sigma_u2: 0.05,
            m_factor: 50,
            monte_carlo_runs: 25,
            master_seed: DEFAULT_SEED,
            output: None,
        }
    }

    /// Desk-scale MSE-versus-dimension sweep.
    pub fn desk_mse_vs_dim() -> Self {
        Self {
            dims: vec![4, 6, 8],
            n_samples: vec![500],
            sigma_u2: 0.05,
            m_factor: 10,
            monte_carlo_runs: 10,
            master_seed: DEFAULT_SEED,
            output: None,
        }
    }

    /// Desk-scale gap-versus-sample-size sweep at K = 8.
    pub fn desk_gap_vs_n() -> Self {
        Self {
            dims: vec![8],
            n_samples: vec![250, 500, 1000, 2000],
            sigma_u2: 0.05,
            m_factor: 10,
            monte_carlo_runs: 10,
            master_seed: DEFAULT_SEED,
            output: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidInput(m.to_string()));
        if self.dims.is_empty() || self.dims.contains(&0) {
            return bad("dims must be a non-empty list of positive integers");
        }
        if self.n_samples.is_empty() || self.n_samples.iter().any(|&n| n < 2) {
            return bad("n_samples must be a non-empty list of integers ≥ 2");
        }
        if let Some(&k) = self.dims.iter().find(|&&k| self.n_samples.iter().any(|&n| n <= k)) {
            return Err(Error::InvalidInput(format!(
                "every n must exceed K = {k} for the sample-covariance benchmark"
            )));
        }
        if !(self.sigma_u2 > 0.0 && self.sigma_u2.is_finite()) {
            return bad("sigma_u2 must be positive");
        }
        if self.m_factor == 0 {
            return bad("m_factor must be positive");
        }
        if self.monte_carlo_runs == 0 {
            return bad("monte_carlo_runs must be positive");
        }
        Ok(())
    }

    pub fn perturbations(&self, k: usize) -> usize {
        self.m_factor * vec_len(k)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExperimentKind {
    MseVsDim,
    GapVsN,
}

impl ExperimentKind {
    pub const NAMES: [&'static str; 2] = ["gaussian-mse-vs-dim", "gaussian-gap-vs-n"];

    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::MseVsDim => Self::NAMES[0],
            ExperimentKind::GapVsN => Self::NAMES[1],
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian-mse-vs-dim" => Ok(ExperimentKind::MseVsDim),
            "gaussian-gap-vs-n" => Ok(ExperimentKind::GapVsN),
            other => Err(Error::InvalidInput(format!(
                "unknown experiment {other:?}; valid names: {}",
                Self::NAMES.join(", ")
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MseRecord {
    #[serde(rename = "K")]
    pub k: usize,
    pub n: usize,
    pub run: usize,
    pub mse_dhalf: f64,
    pub mse_sample: f64,
}

impl MseRecord {
    pub fn gap(&self) -> f64 {
        self.mse_dhalf - self.mse_sample
    }
}

/// One Monte Carlo job.
pub fn run_job(config: &ExperimentConfig, k: usize, n: usize, run: usize) -> Result<MseRecord> {
    let context = |e: Error| Error::InvalidInput(format!("K = {k}, n = {n}, run = {run}: {e}"));
    let job_seed = derive_path(config.master_seed, &[k as u64, run as u64]);
    let law = PerturbationLaw::Gaussian {
        sigma: config.sigma_u2.sqrt(),
    };
    let design = sample_perturbations_with(k, config.perturbations(k), law, derive_path(job_seed, &[0]))
        .map_err(|e| match e {
            Error::RankDeficient { .. } => e,
            other => context(other),
        })?;
    let model = GaussianMeanModel::standard(k)?;
    let theta = vec![0.0; k];
    let truth = DMatrix::<f64>::identity(k, k);

    let q = estimate_q(
        &model,
        &theta,
        &design,
        n,
        n,
        derive_path(job_seed, &[1]),
        QOptions::default(),
    )?;
    let estimate = ls_fim(&design, &q)?;
    let mse_dhalf = frobenius_distance2(estimate.matrix(), &truth);

    let x = model.sample(&theta, n, derive_path(job_seed, &[2]))?;
    let mse_sample = frobenius_distance2(&sample_fim_oracle(&x)?, &truth);

    Ok(MseRecord {
        k,
        n,
        run,
        mse_dhalf,
        mse_sample,
    })
}

/// Run every `(K, n, run)` cell of the configuration. Output is sorted by
/// `(K, n, run)` regardless of execution order.
pub fn run_grid(config: &ExperimentConfig) -> Result<Vec<MseRecord>> {
    config.validate()?;
    let jobs: Vec<(usize, usize, usize)> = config
        .dims
        .iter()
        .flat_map(|&k| {
            config
                .n_samples
                .iter()
                .flat_map(move |&n| (0..config.monte_carlo_runs).map(move |r| (k, n, r)))
        })
        .collect();
    let mut records: Vec<MseRecord> = jobs
        .par_iter()
        .map(|&(k, n, r)| run_job(config, k, n, r))
        .collect::<Result<_>>()?;
    records.sort_by_key(|r| (r.k, r.n, r.run));
    Ok(records)
}

pub fn run_gaussian_mse_vs_dim(config: &ExperimentConfig) -> Result<Vec<MseRecord>> {
    run_grid(config)
}

pub fn run_gaussian_gap_vs_n(config: &ExperimentConfig) -> Result<Vec<MseRecord>> {
    run_grid(config)
}

/// Run inside a dedicated thread pool. The worker count changes speed only.
pub fn run_with_workers(config: &ExperimentConfig, workers: usize) -> Result<Vec<MseRecord>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::NumericalFailure(format!("thread pool: {e}")))?;
    pool.install(|| run_grid(config))
}

/// CSV with 17 significant digits per float.
pub fn to_csv(records: &[MseRecord]) -> String {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(out, "{},{},{},{:.16e},{:.16e}", r.k, r.n, r.run, r.mse_dhalf, r.mse_sample);
    }
    out
}

/// Mean and standard error of the mean.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellSummary {
    #[serde(rename = "K")]
    pub k: usize,
    pub n: usize,
    pub runs: usize,
    pub mean_dhalf: f64,
    pub se_dhalf: f64,
    pub mean_sample: f64,
    pub se_sample: f64,
    pub mean_gap: f64,
    pub se_gap: f64,
}

/// Per-`(K, n)` means and standard errors, in `(K, n)` order.
pub fn summarize(records: &[MseRecord]) -> Vec<CellSummary> {
    let mut cells: Vec<(usize, usize)> = records.iter().map(|r| (r.k, r.n)).collect();
    cells.sort_unstable();
    cells.dedup();
    cells
        .into_iter()
        .map(|(k, n)| {
            let rs: Vec<&MseRecord> = records.iter().filter(|r| r.k == k && r.n == n).collect();
            let dh: Vec<f64> = rs.iter().map(|r| r.mse_dhalf).collect();
            let sa: Vec<f64> = rs.iter().map(|r| r.mse_sample).collect();
            let gp: Vec<f64> = rs.iter().map(|r| r.gap()).collect();
            let (mean_dhalf, se_dhalf) = mean_se(&dh);
            let (mean_sample, se_sample) = mean_se(&sa);
            let (mean_gap, se_gap) = mean_se(&gp);
            CellSummary {
                k,
                n,
                runs: rs.len(),
                mean_dhalf,
                se_dhalf,
                mean_sample,
                se_sample,
                mean_gap,
                se_gap,
            }
        })
        .collect()
}

/// For each consecutive pair, whether `means[i+1] ≤ means[i] + sqrt(se_i² + se_{i+1}²)`.
pub fn non_increasing_within_pooled_se(means: &[f64], ses: &[f64]) -> Vec<bool> {
    means
        .windows(2)
        .zip(ses.windows(2))
        .map(|(m, s)| m[1] <= m[0] + (s[0] * s[0] + s[1] * s[1]).sqrt())
        .collect()
}

/// Plain-text summary table.
pub fn summary_table(kind: ExperimentKind, cells: &[CellSummary]) -> String {
    let mut out = String::new();
    match kind {
        ExperimentKind::MseVsDim => {
            let _ = writeln!(out, "{:>4} {:>6} {:>5} {:>14} {:>12} {:>14} {:>12}", "K", "n", "runs", "mse_dhalf", "se", "mse_sample", "se");
            for c in cells {
                let _ = writeln!(
                    out,
                    "{:>4} {:>6} {:>5} {:>14.6} {:>12.6} {:>14.6} {:>12.6}",
                    c.k, c.n, c.runs, c.mean_dhalf, c.se_dhalf, c.mean_sample, c.se_sample
                );
            }
        }
        ExperimentKind::GapVsN => {
            let _ = writeln!(out, "{:>4} {:>6} {:>5} {:>14} {:>12}", "K", "n", "runs", "gap", "se");
            for c in cells {
                let _ = writeln!(out, "{:>4} {:>6} {:>5} {:>14.6} {:>12.6}", c.k, c.n, c.runs, c.mean_gap, c.se_gap);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ExperimentConfig {
        ExperimentConfig {
            dims: vec![2],
            n_samples: vec![40, 80],
            sigma_u2: 0.05,
            m_factor: 3,
            monte_carlo_runs: 2,
            master_seed: 11,
            output: None,
        }
    }

    #[test]
    fn names_round_trip() {
        for name in ExperimentKind::NAMES {
            assert_eq!(name.parse::<ExperimentKind>().unwrap().name(), name);
        }
        assert!("fig3".parse::<ExperimentKind>().is_err());
    }

    #[test]
    fn validation() {
        let mut c = tiny();
        c.sigma_u2 = 0.0;
        assert!(c.validate().is_err());
        let mut c = tiny();
        c.n_samples = vec![2];
        assert!(c.validate().is_err());
        assert!(ExperimentConfig::full_mse_vs_dim().validate().is_ok());
        assert_eq!(ExperimentConfig::full_mse_vs_dim().perturbations(4), 500);
    }

    #[test]
    fn grid_is_ordered_and_complete() {
        let recs = run_grid(&tiny()).unwrap();
        assert_eq!(recs.len(), 4);
        let keys: Vec<_> = recs.iter().map(|r| (r.k, r.n, r.run)).collect();
        assert_eq!(keys, vec![(2, 40, 0), (2, 40, 1), (2, 80, 0), (2, 80, 1)]);
        assert!(recs.iter().all(|r| r.mse_dhalf >= 0.0 && r.mse_sample >= 0.0));
        let csv = to_csv(&recs);
        assert!(csv.starts_with("K,n,run,mse_dhalf,mse_sample\n"));
        assert_eq!(csv.lines().count(), 5);
    }

    #[test]
    fn exact_answer_has_zero_error() {
        let truth = DMatrix::<f64>::identity(3, 3);
        assert_eq!(frobenius_distance2(&truth, &truth), 0.0);
    }

    #[test]
    fn trend_helper() {
        let ok = non_increasing_within_pooled_se(&[3.0, 2.0, 2.05], &[0.1, 0.1, 0.1]);
        assert_eq!(ok, vec![true, true]);
        let bad = non_increasing_within_pooled_se(&[1.0, 2.0], &[0.1, 0.1]);
        assert_eq!(bad, vec![false]);
    }

    #[test]
    fn seventeen_digit_floats() {
        let csv = to_csv(&[MseRecord {
            k: 4,
            n: 10,
            run: 0,
            mse_dhalf: 0.1,
            mse_sample: 2.0,
        }]);
        let line = csv.lines().nth(1).unwrap();
        assert_eq!(line, "4,10,0,1.0000000000000001e-1,2.0000000000000000e0");
    }
}
