//! Command-line front end.
//!
//! Exit codes: 0 ok, 1 other failure, 2 input error, 3 duplicate points,
//! 4 model failure, 5 rank-deficient design, 6 zero weight.

use crate::crlb::{invert_matrix_to_crlb, weighted_volume, WeightMatrix, DEFAULT_LOADING};
use crate::divergence::estimate_divergence;
use crate::emst::PointCloud;
use crate::error::{Error, Result};
use crate::experiments::{self, ExperimentConfig, ExperimentKind};
use crate::fim::{
    diagonal_fim, estimate_q, ls_fim, psd_constrained_fim, sample_perturbations_with, vec_len, FimEstimate,
    PerturbationLaw, QOptions,
};
use crate::models::{ExternalModel, GaussianMeanModel, GenerativeModel};
use crate::rng::{derive_path, CtrRng};
use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

/// Seed used when `--seed` is not given.
pub const DEFAULT_SEED: u64 = experiments::DEFAULT_SEED;
/// Environment variable overriding the worker count.
pub const WORKERS_ENV: &str = "FIMEST_WORKERS";

#[derive(Debug, Parser)]
#[command(name = "fimest", version, about = "Non-parametric Fisher information estimation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the divergence between two CSV sample files.
    Divergence(DivergenceArgs),
    /// Estimate the FIM of a builtin or external generative model.
    Fim(FimArgs),
    /// Invert a FIM (JSON) into a Cramér-Rao bound.
    Crlb(CrlbArgs),
    /// Run a Monte Carlo replication and write its CSV.
    Experiment(ExperimentArgs),
    /// Serve the builtin Gaussian model over the external-model protocol
    /// (one request on stdin, CSV on stdout).
    ReferenceModel(ReferenceModelArgs),
}

#[derive(Debug, Args)]
pub struct DivergenceArgs {
    pub file_p: PathBuf,
    pub file_q: PathBuf,
    /// Skip one header line in each file.
    #[arg(long)]
    pub header: bool,
    /// Floor the reported estimate at 0.
    #[arg(long)]
    pub clamp: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    Gaussian,
    External,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Ls,
    Psd,
    Both,
}

#[derive(Debug, Args)]
pub struct FimArgs {
    #[arg(long, value_enum)]
    pub model: ModelKind,
    /// Parameter dimension d.
    #[arg(long)]
    pub dim: usize,
    /// Output dimension K of an external model (defaults to d).
    #[arg(long)]
    pub output_dim: Option<usize>,
    /// Standard deviation of the builtin Gaussian model.
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// External model executable.
    #[arg(long)]
    pub cmd: Option<PathBuf>,
    /// Argument passed to the external model (repeatable).
    #[arg(long = "arg", allow_hyphen_values = true)]
    pub cmd_args: Vec<String>,
    /// External model timeout in seconds.
    #[arg(long, default_value_t = 60.0)]
    pub timeout: f64,
    /// Comma-separated parameter vector (defaults to zeros).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub theta: Vec<f64>,
    /// Samples per cloud (n_p).
    #[arg(long)]
    pub n: usize,
    /// Samples in each perturbed cloud (defaults to n).
    #[arg(long)]
    pub n_q: Option<usize>,
    /// Gaussian perturbations with this per-component standard deviation.
    #[arg(long, conflicts_with = "radius")]
    pub sigma_u: Option<f64>,
    /// Perturbations uniform in a ball of this radius.
    #[arg(long)]
    pub radius: Option<f64>,
    /// Number of perturbations (defaults to 10·d(d+1)/2).
    #[arg(long)]
    pub m: Option<usize>,
    /// Perturbations per axis for the diagonal estimate.
    #[arg(long, default_value_t = 10)]
    pub diag_m: usize,
    #[arg(long, value_enum, default_value_t = MethodArg::Psd)]
    pub method: MethodArg,
    /// Reuse one reference sample for all perturbations.
    #[arg(long)]
    pub shared_reference: bool,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct CrlbArgs {
    /// FIM as a JSON matrix, or the output of `fimest fim`.
    pub fim: PathBuf,
    /// Diagonal weights as a JSON array.
    #[arg(long)]
    pub weights: Option<PathBuf>,
    /// Diagonal loading factor ε.
    #[arg(long, default_value_t = DEFAULT_LOADING)]
    pub epsilon: f64,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// gaussian-mse-vs-dim or gaussian-gap-vs-n.
    pub name: String,
    /// Experiment configuration (JSON).
    pub config: PathBuf,
    /// CSV destination; overrides the config's `output`.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReferenceModelArgs {
    #[arg(value_enum)]
    pub model: ReferenceKind,
    #[arg(long)]
    pub dim: usize,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ReferenceKind {
    Gaussian,
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidInput(_)
        | Error::ShapeError(_)
        | Error::NonFiniteInput { .. }
        | Error::DimensionMismatch { .. }
        | Error::LabelMismatch { .. }
        | Error::DomainError(_)
        | Error::Io(_) => 2,
        Error::DuplicatePoints { .. } => 3,
        Error::ModelFailure { .. } | Error::SpawnFailure { .. } | Error::Timeout { .. } | Error::ProtocolError { .. } => 4,
        Error::RankDeficient { .. } | Error::SingularNormalEquations { .. } => 5,
        Error::SingularWeight { .. } => 6,
        _ => 1,
    }
}

/// Parse the CLI, run it and return the process exit code.
pub fn main_entry() -> i32 {
    let cli = Cli::parse();
    if let Some(workers) = std::env::var(WORKERS_ENV).ok().and_then(|v| v.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build_global();
    }
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match run(cli.command, &mut out) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn run(command: Command, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::Divergence(a) => {
            let report = cmd_divergence(&a)?;
            writeln!(out, "{}", serde_json::to_string_pretty(&report).unwrap_or_default())?;
        }
        Command::Fim(a) => {
            let report = cmd_fim(&a)?;
            writeln!(out, "{}", serde_json::to_string_pretty(&report).unwrap_or_default())?;
        }
        Command::Crlb(a) => {
            let report = cmd_crlb(&a)?;
            writeln!(out, "{}", serde_json::to_string_pretty(&report).unwrap_or_default())?;
        }
        Command::Experiment(a) => {
            let table = cmd_experiment(&a)?;
            write!(out, "{table}")?;
        }
        Command::ReferenceModel(a) => {
            let stdin = std::io::stdin();
            serve_reference_model(&a, &mut stdin.lock(), out)?;
        }
    }
    Ok(())
}

/// Read a headerless numeric CSV (rows = observations). Errors carry the
/// file name and line number.
pub fn read_matrix_csv(path: &Path, header: bool) -> Result<PointCloud> {
    let name = path.display();
    let file = std::fs::File::open(path).map_err(|e| Error::InvalidInput(format!("{name}: {e}")))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let mut data = Vec::new();
    let mut width = None;
    for record in reader.records() {
        let record = record.map_err(|e| Error::InvalidInput(format!("{name}: {e}")))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if width.is_some_and(|w| w != record.len()) {
            return Err(Error::InvalidInput(format!(
                "{name}:{line}: expected {} columns, found {}",
                width.unwrap_or(0),
                record.len()
            )));
        }
        width = Some(record.len());
        for field in record.iter() {
            let v: f64 = field
                .parse()
                .map_err(|_| Error::InvalidInput(format!("{name}:{line}: {field:?} is not a number")))?;
            if !v.is_finite() {
                return Err(Error::InvalidInput(format!("{name}:{line}: non-finite value {field}")));
            }
            data.push(v);
        }
    }
    let width = width.ok_or_else(|| Error::InvalidInput(format!("{name}: no data rows")))?;
    PointCloud::new(data, width)
}

#[derive(Debug, Serialize)]
pub struct DivergenceReport {
    pub d_hat: f64,
    #[serde(rename = "C")]
    pub c: usize,
    pub n_p: usize,
    pub n_q: usize,
    pub alpha: f64,
}

pub fn cmd_divergence(a: &DivergenceArgs) -> Result<DivergenceReport> {
    let xp = read_matrix_csv(&a.file_p, a.header)?;
    let xq = read_matrix_csv(&a.file_q, a.header)?;
    if xp.dim() != xq.dim() {
        return Err(Error::InvalidInput(format!(
            "column counts differ: {} has {}, {} has {}",
            a.file_p.display(),
            xp.dim(),
            a.file_q.display(),
            xq.dim()
        )));
    }
    let mut e = estimate_divergence(&xp, &xq)?;
    if a.clamp {
        e = e.clamped();
    }
    Ok(DivergenceReport {
        d_hat: e.d_hat,
        c: e.c,
        n_p: e.n_p,
        n_q: e.n_q,
        alpha: e.alpha,
    })
}

#[derive(Debug, Serialize)]
pub struct FimReport {
    pub method: crate::fim::FimMethod,
    pub fim: Vec<Vec<f64>>,
    pub f_vec: Vec<f64>,
    pub residual_norm: f64,
    pub min_eigenvalue: f64,
    pub iterations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagonal_targets: Option<Vec<f64>>,
}

impl FimReport {
    fn new(f: &FimEstimate, diagonal_targets: Option<Vec<f64>>) -> Self {
        Self {
            method: f.method(),
            fim: matrix_rows(f.matrix()),
            f_vec: f.f_vec().to_vec(),
            residual_norm: f.diagnostics().residual_norm,
            min_eigenvalue: f.diagnostics().min_eigenvalue,
            iterations: f.diagnostics().iterations,
            diagonal_targets,
        }
    }
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn build_model(a: &FimArgs) -> Result<Box<dyn GenerativeModel>> {
    match a.model {
        ModelKind::Gaussian => {
            if a.output_dim.is_some_and(|k| k != a.dim) {
                return Err(Error::InvalidInput("the Gaussian model has K = d".into()));
            }
            Ok(Box::new(GaussianMeanModel::new(a.dim, a.sigma)?))
        }
        ModelKind::External => {
            let cmd = a
                .cmd
                .clone()
                .ok_or_else(|| Error::InvalidInput("--model external requires --cmd".into()))?;
            if !(a.timeout > 0.0) {
                return Err(Error::InvalidInput("--timeout must be positive".into()));
            }
            Ok(Box::new(
                ExternalModel::new(cmd, a.dim, a.output_dim.unwrap_or(a.dim))
                    .args(a.cmd_args.clone())
                    .timeout(Duration::from_secs_f64(a.timeout)),
            ))
        }
    }
}

/// Axis magnitudes for the diagonal estimate: `|t|` for `t` drawn from the
/// one-dimensional version of the perturbation law.
pub fn diagonal_magnitudes(law: PerturbationLaw, d: usize, per_axis: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = CtrRng::new(seed, 0);
    (0..d)
        .map(|_| {
            (0..per_axis)
                .map(|_| loop {
                    let t = law.draw(1, &mut rng)[0].abs();
                    if t > 0.0 {
                        break t;
                    }
                })
                .collect()
        })
        .collect()
}

pub fn cmd_fim(a: &FimArgs) -> Result<Value> {
    if a.dim == 0 {
        return Err(Error::InvalidInput("--dim must be at least 1".into()));
    }
    let theta = if a.theta.is_empty() { vec![0.0; a.dim] } else { a.theta.clone() };
    if theta.len() != a.dim {
        return Err(Error::InvalidInput(format!(
            "--theta has {} entries, expected d = {}",
            theta.len(),
            a.dim
        )));
    }
    let law = match (a.sigma_u, a.radius) {
        (Some(sigma), None) => PerturbationLaw::Gaussian { sigma },
        (None, Some(radius)) => PerturbationLaw::Ball { radius },
        _ => return Err(Error::InvalidInput("exactly one of --sigma-u or --radius is required".into())),
    };
    if a.diag_m == 0 {
        return Err(Error::InvalidInput("--diag-m must be positive".into()));
    }
    let model = build_model(a)?;
    let n_q = a.n_q.unwrap_or(a.n);
    let m = a.m.unwrap_or(10 * vec_len(a.dim));
    let options = QOptions {
        shared_reference: a.shared_reference,
    };

    let design = sample_perturbations_with(a.dim, m, law, derive_path(a.seed, &[0]))?;
    let q = estimate_q(&model, &theta, &design, a.n, n_q, derive_path(a.seed, &[1]), options)?;
    let ls = ls_fim(&design, &q)?;
    let ls_report = FimReport::new(&ls, None);
    if a.method == MethodArg::Ls {
        return Ok(serde_json::to_value(ls_report).unwrap_or(Value::Null));
    }

    let magnitudes = diagonal_magnitudes(law, a.dim, a.diag_m, derive_path(a.seed, &[2]));
    let diag = diagonal_fim(&model, &theta, &magnitudes, a.n, n_q, derive_path(a.seed, &[3]), options)?;
    let psd = psd_constrained_fim(&design, &q, &diag)?;
    let psd_report = FimReport::new(&psd, Some(diag));
    Ok(match a.method {
        MethodArg::Psd => serde_json::to_value(psd_report).unwrap_or(Value::Null),
        _ => json!({ "plain_ls": ls_report, "psd_constrained": psd_report }),
    })
}

/// Accepts a bare JSON matrix, an object with a `fim` matrix, or the
/// `--method both` output of `fimest fim` (the PSD estimate is used).
pub fn parse_fim_json(text: &str) -> Result<DMatrix<f64>> {
    let v: Value = serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("FIM JSON: {e}")))?;
    let m = match &v {
        Value::Array(_) => &v,
        Value::Object(o) => o
            .get("fim")
            .or_else(|| o.get("psd_constrained").and_then(|p| p.get("fim")))
            .or_else(|| o.get("plain_ls").and_then(|p| p.get("fim")))
            .ok_or_else(|| Error::InvalidInput("FIM JSON object has no \"fim\" matrix".into()))?,
        _ => return Err(Error::InvalidInput("FIM JSON must be a matrix".into())),
    };
    let rows: Vec<Vec<f64>> =
        serde_json::from_value(m.clone()).map_err(|e| Error::InvalidInput(format!("FIM matrix: {e}")))?;
    let d = rows.len();
    if d == 0 || rows.iter().any(|r| r.len() != d) {
        return Err(Error::InvalidInput("FIM must be a non-empty square matrix".into()));
    }
    let m = DMatrix::from_fn(d, d, |i, j| rows[i][j]);
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("FIM has non-finite entries".into()));
    }
    let scale = m.abs().max().max(1.0);
    if crate::linalg::asymmetry(&m) > 1e-10 * scale {
        return Err(Error::InvalidInput("FIM is not symmetric".into()));
    }
    Ok(m)
}

#[derive(Debug, Serialize)]
pub struct CrlbReport {
    pub crlb: Vec<Vec<f64>>,
    pub std_dev: Vec<f64>,
    pub loading_used: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub volume: Option<f64>,
}

pub fn cmd_crlb(a: &CrlbArgs) -> Result<CrlbReport> {
    let text = std::fs::read_to_string(&a.fim)
        .map_err(|e| Error::InvalidInput(format!("{}: {e}", a.fim.display())))?;
    let f = parse_fim_json(&text)?;
    let c = invert_matrix_to_crlb(&f, a.epsilon)?;
    let volume = match &a.weights {
        None => None,
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
            let w: Vec<f64> =
                serde_json::from_str(&text).map_err(|e| Error::InvalidInput(format!("weights JSON: {e}")))?;
            if w.len() != f.nrows() {
                return Err(Error::InvalidInput(format!(
                    "{} weights for a {}-parameter FIM",
                    w.len(),
                    f.nrows()
                )));
            }
            Some(weighted_volume(&c, &WeightMatrix::new(w)?)?)
        }
    };
    Ok(CrlbReport {
        crlb: matrix_rows(c.matrix()),
        std_dev: c.std_devs(),
        loading_used: c.loading_used(),
        volume,
    })
}

pub fn load_experiment_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
    let config: ExperimentConfig =
        serde_json::from_str(&text).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
    config.validate()?;
    Ok(config)
}

/// Runs the experiment, writes its CSV and returns the summary table.
pub fn cmd_experiment(a: &ExperimentArgs) -> Result<String> {
    let kind: ExperimentKind = a.name.parse()?;
    let config = load_experiment_config(&a.config)?;
    let output = a
        .output
        .clone()
        .or_else(|| config.output.clone())
        .ok_or_else(|| Error::InvalidInput("no output path: pass --output or set \"output\" in the config".into()))?;
    let records = match kind {
        ExperimentKind::MseVsDim => experiments::run_gaussian_mse_vs_dim(&config)?,
        ExperimentKind::GapVsN => experiments::run_gaussian_gap_vs_n(&config)?,
    };
    std::fs::write(&output, experiments::to_csv(&records))?;
    Ok(experiments::summary_table(kind, &experiments::summarize(&records)))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct OwnedRequest {
    theta: Vec<f64>,
    n: usize,
    seed: u64,
}

/// Answer one external-model request with the builtin Gaussian sampler.
pub fn serve_reference_model(a: &ReferenceModelArgs, input: &mut dyn BufRead, out: &mut dyn Write) -> Result<()> {
    let model = match a.model {
        ReferenceKind::Gaussian => GaussianMeanModel::new(a.dim, a.sigma)?,
    };
    let mut line = String::new();
    input.read_line(&mut line)?;
    let req: OwnedRequest =
        serde_json::from_str(line.trim_end()).map_err(|e| Error::InvalidInput(format!("request: {e}")))?;
    let x = model.sample(&req.theta, req.n, req.seed)?;
    let mut buf = String::with_capacity(x.len() * x.dim() * 22);
    for row in x.rows() {
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                buf.push(',');
            }
            buf.push_str(&v.to_string());
        }
        buf.push('\n');
    }
    out.write_all(buf.as_bytes())?;
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_are_stable() {
        assert_eq!(exit_code(&Error::InvalidInput(String::new())), 2);
        assert_eq!(exit_code(&Error::DuplicatePoints { first: 0, second: 1 }), 3);
        assert_eq!(
            exit_code(&Error::ModelFailure {
                job: 0,
                source: Box::new(Error::InvalidInput(String::new()))
            }),
            4
        );
        assert_eq!(exit_code(&Error::RankDeficient { condition: 1.0 }), 5);
        assert_eq!(exit_code(&Error::SingularWeight { index: 0 }), 6);
        assert_eq!(exit_code(&Error::NonConvergence { iterations: 1 }), 1);
    }

    #[test]
    fn fim_json_shapes() {
        assert_eq!(parse_fim_json("[[1,0],[0,2]]").unwrap()[(1, 1)], 2.0);
        assert_eq!(parse_fim_json(r#"{"fim":[[3]]}"#).unwrap()[(0, 0)], 3.0);
        assert_eq!(
            parse_fim_json(r#"{"plain_ls":{"fim":[[1]]},"psd_constrained":{"fim":[[4]]}}"#).unwrap()[(0, 0)],
            4.0
        );
        assert!(parse_fim_json("[[1,2],[0,1]]").is_err());
        assert!(parse_fim_json("[[1,2]]").is_err());
        assert!(parse_fim_json("{}").is_err());
    }

    #[test]
    fn reference_model_matches_builtin() {
        let args = ReferenceModelArgs {
            model: ReferenceKind::Gaussian,
            dim: 2,
            sigma: 1.0,
        };
        let mut input = std::io::Cursor::new(b"{\"theta\":[0.5,-1.0],\"n\":4,\"seed\":7}\n".to_vec());
        let mut out = Vec::new();
        serve_reference_model(&args, &mut input, &mut out).unwrap();
        let parsed = crate::models::parse_response_for_tests(&out, 4, 2).unwrap();
        let direct = GaussianMeanModel::standard(2).unwrap().sample(&[0.5, -1.0], 4, 7).unwrap();
        assert_eq!(parsed, direct);
    }

    #[test]
    fn diagonal_magnitudes_are_positive() {
        let m = diagonal_magnitudes(PerturbationLaw::Ball { radius: 0.3 }, 3, 5, 1);
        assert_eq!(m.len(), 3);
        assert!(m.iter().flatten().all(|&t| t > 0.0 && t <= 0.3));
    }
}
