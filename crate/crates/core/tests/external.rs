#![cfg(unix)]

use fimest::fim::{estimate_q, ls_fim, sample_perturbations, QOptions};
use fimest::models::{ExternalModel, GaussianMeanModel, GenerativeModel};
use fimest::Error;
use std::os::unix::fs::PermissionsExt;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

fn script(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, format!("#!/bin/sh\n{body}\n")).unwrap();
    std::fs::set_permissions(&path, std::fs::Permissions::from_mode(0o755)).unwrap();
    path
}

fn reference_model(dim: usize) -> ExternalModel {
    ExternalModel::new(env!("CARGO_BIN_EXE_fimest"), dim, dim).args(["reference-model", "gaussian", "--dim", &dim.to_string()])
}

#[test]
fn reference_subprocess_is_bit_identical() {
    let builtin = GaussianMeanModel::standard(2).unwrap();
    let external = reference_model(2);
    for (theta, n, seed) in [([0.0, 0.0], 5, 0u64), ([1.5, -2.0], 64, 99), ([0.0, 1e-9], 3, u64::MAX)] {
        assert_eq!(external.sample(&theta, n, seed).unwrap(), builtin.sample(&theta, n, seed).unwrap());
    }
}

#[test]
fn python_reference_model_is_bit_identical() {
    if Command::new("python3").arg("--version").output().is_err() {
        eprintln!("python3 not available; skipping");
        return;
    }
    let script = concat!(env!("CARGO_MANIFEST_DIR"), "/scripts/gaussian_model.py");
    let external = ExternalModel::new("python3", 3, 3).args([script]);
    let builtin = GaussianMeanModel::standard(3).unwrap();
    let design = sample_perturbations(3, 12, 0.5, 5).unwrap();
    let a = estimate_q(&builtin, &[0.1, 0.2, 0.3], &design, 80, 80, 6, QOptions::default()).unwrap();
    let b = estimate_q(&external, &[0.1, 0.2, 0.3], &design, 80, 80, 6, QOptions::default()).unwrap();
    assert_eq!(a.values(), b.values());
    assert_eq!(ls_fim(&design, &a).unwrap().f_vec(), ls_fim(&design, &b).unwrap().f_vec());
}

#[test]
fn short_output_is_a_protocol_error() {
    let dir = tempfile::tempdir().unwrap();
    let model = ExternalModel::new(script(dir.path(), "short.sh", "read line\necho 1.0\necho 2.0"), 1, 1);
    assert!(model.sample(&[0.0], 2, 0).is_ok());
    assert!(matches!(model.sample(&[0.0], 3, 0), Err(Error::ProtocolError { .. })));
}

#[test]
fn bad_rows_are_protocol_errors() {
    let dir = tempfile::tempdir().unwrap();
    let wide = ExternalModel::new(script(dir.path(), "wide.sh", "read line\necho 1.0,2.0"), 1, 1);
    assert!(matches!(wide.sample(&[0.0], 1, 0), Err(Error::ProtocolError { .. })));
    let text = ExternalModel::new(script(dir.path(), "text.sh", "read line\necho abc"), 1, 1);
    assert!(matches!(text.sample(&[0.0], 1, 0), Err(Error::ProtocolError { .. })));
    let nan = ExternalModel::new(script(dir.path(), "nan.sh", "read line\necho NaN"), 1, 1);
    assert!(matches!(nan.sample(&[0.0], 1, 0), Err(Error::ProtocolError { .. })));
}

#[test]
fn nonzero_exit_keeps_stderr() {
    let dir = tempfile::tempdir().unwrap();
    let model = ExternalModel::new(script(dir.path(), "fail.sh", "read line\necho boom >&2\nexit 3"), 1, 1);
    match model.sample(&[0.0], 1, 0) {
        Err(Error::ProtocolError { stderr, .. }) => assert!(stderr.contains("boom")),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn request_line_reaches_the_model() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("request.txt");
    let body = format!("cat > {}\necho 0.5", log.display());
    let model = ExternalModel::new(script(dir.path(), "log.sh", &body), 1, 1);
    model.sample(&[0.25], 1, 42).unwrap();
    assert_eq!(std::fs::read_to_string(log).unwrap(), "{\"theta\":[0.25],\"n\":1,\"seed\":42}\n");
}

#[test]
fn slow_model_times_out() {
    let dir = tempfile::tempdir().unwrap();
    let model = ExternalModel::new(script(dir.path(), "slow.sh", "sleep 5"), 1, 1).timeout(Duration::from_millis(300));
    let start = Instant::now();
    assert!(matches!(model.sample(&[0.0], 1, 0), Err(Error::Timeout { .. })));
    assert!(start.elapsed() < Duration::from_secs(3));
}

#[test]
fn missing_program_is_a_spawn_failure() {
    let model = ExternalModel::new("/nonexistent/model", 1, 1);
    assert!(matches!(model.sample(&[0.0], 1, 0), Err(Error::SpawnFailure { .. })));
}
