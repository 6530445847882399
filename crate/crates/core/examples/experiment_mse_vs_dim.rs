//! Desk-scale Monte Carlo sweeps on the Gaussian mean model.
//!
//! ```text
//! cargo run --release --example experiment_mse_vs_dim [mse|gap]
//! ```

use fimest::experiments::{
    non_increasing_within_pooled_se, run_gaussian_gap_vs_n, run_gaussian_mse_vs_dim, summarize, summary_table,
    ExperimentConfig, ExperimentKind,
};

fn main() -> fimest::Result<()> {
    let which = std::env::args().nth(1).unwrap_or_else(|| "mse".into());
    let (kind, config) = match which.as_str() {
        "gap" => (ExperimentKind::GapVsN, ExperimentConfig::desk_gap_vs_n()),
        _ => (ExperimentKind::MseVsDim, ExperimentConfig::desk_mse_vs_dim()),
    };
    let start = std::time::Instant::now();
    let records = match kind {
        ExperimentKind::MseVsDim => run_gaussian_mse_vs_dim(&config)?,
        ExperimentKind::GapVsN => run_gaussian_gap_vs_n(&config)?,
    };
    let cells = summarize(&records);
    print!("{}", summary_table(kind, &cells));

    let (means, ses): (Vec<f64>, Vec<f64>) = match kind {
        ExperimentKind::MseVsDim => cells.iter().map(|c| (c.mean_dhalf, c.se_dhalf)).unzip(),
        ExperimentKind::GapVsN => cells.iter().map(|c| (c.mean_gap, c.se_gap)).unzip(),
    };
    println!("non-increasing within pooled SE: {:?}", non_increasing_within_pooled_se(&means, &ses));
    println!("{} jobs in {:.1?}", records.len(), start.elapsed());
    Ok(())
}
