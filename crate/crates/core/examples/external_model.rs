//! Drive an out-of-process simulator through the stdin/stdout protocol and
//! check it against the builtin model.
//!
//! ```text
//! cargo run --example external_model [PROGRAM [ARGS...]]
//! ```
//!
//! Defaults to `python3 scripts/gaussian_model.py`, which reproduces the
//! builtin Gaussian draws.

use fimest::fim::{estimate_q, ls_fim, sample_perturbations, QOptions};
use fimest::models::{ExternalModel, GaussianMeanModel, GenerativeModel};

fn main() -> fimest::Result<()> {
    let mut args: Vec<String> = std::env::args().skip(1).collect();
    if args.is_empty() {
        let script = concat!(env!("CARGO_MANIFEST_DIR"), "/scripts/gaussian_model.py");
        args = vec!["python3".into(), script.into()];
    }
    let external = ExternalModel::new(&args[0], 2, 2).args(args[1..].to_vec());
    let builtin = GaussianMeanModel::standard(2)?;

    let x = external.sample(&[0.0, 1.0], 5, 42)?;
    println!("external rows: {:?}", x.rows().collect::<Vec<_>>());
    println!("matches builtin: {}", x == builtin.sample(&[0.0, 1.0], 5, 42)?);

    let design = sample_perturbations(2, 30, 0.5, 3)?;
    let q = estimate_q(&external, &[0.0, 0.0], &design, 200, 200, 8, QOptions::default())?;
    println!("FIM from the external model{}", ls_fim(&design, &q)?.matrix());
    Ok(())
}
