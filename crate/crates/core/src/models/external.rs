//! Adapter for simulators running as a child process.
//!
//! Protocol, one process per sampling call:
//!
//! ```text
//! stdin  <- {"theta":[f64,...],"n":uint,"seed":uint64}\n
//! stdout -> n lines, each K comma-separated decimal floats
//! exit status 0
//! ```
//!
//! Any deviation (wrong row count, wrong column count, unparsable or
//! non-finite value, nonzero exit) is a `ProtocolError`.

use super::GenerativeModel;
use crate::emst::PointCloud;
use crate::error::{Error, Result};
use serde::Serialize;
use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::sync::mpsc;
use std::thread;
use std::time::{Duration, Instant};

#[derive(Debug, Serialize)]
pub struct SampleRequest<'a> {
    pub theta: &'a [f64],
    pub n: usize,
    pub seed: u64,
}

impl SampleRequest<'_> {
    /// The exact request line, including the trailing newline.
    pub fn to_line(&self) -> String {
        let mut s = serde_json::to_string(self).expect("request is always serializable");
        s.push('\n');
        s
    }
}

#[derive(Clone, Debug)]
pub struct ExternalModel {
    program: PathBuf,
    args: Vec<String>,
    param_dim: usize,
    output_dim: usize,
    timeout: Duration,
}

impl ExternalModel {
    pub fn new(program: impl Into<PathBuf>, param_dim: usize, output_dim: usize) -> Self {
        Self {
            program: program.into(),
            args: Vec::new(),
            param_dim,
            output_dim,
            timeout: Duration::from_secs(60),
        }
    }

    pub fn args<I, S>(mut self, args: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.args = args.into_iter().map(Into::into).collect();
        self
    }

    pub fn timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    fn run(&self, request: &str) -> Result<(Vec<u8>, String)> {
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| Error::SpawnFailure {
                message: format!("{}: {e}", self.program.display()),
            })?;

        let mut stdout = child.stdout.take().expect("stdout is piped");
        let mut stderr = child.stderr.take().expect("stderr is piped");
        let (out_tx, out_rx) = mpsc::channel();
        let (err_tx, err_rx) = mpsc::channel();
        thread::spawn(move || {
            let mut buf = Vec::new();
            let _ = stdout.read_to_end(&mut buf);
            let _ = out_tx.send(buf);
        });
        thread::spawn(move || {
            let mut buf = Vec::new();
            let _ = stderr.read_to_end(&mut buf);
            let _ = err_tx.send(String::from_utf8_lossy(&buf).into_owned());
        });

        // A child that exits without reading its input closes the pipe; the
        // exit status and output checks below report that case.
        if let Some(mut stdin) = child.stdin.take() {
            let _ = stdin.write_all(request.as_bytes());
        }

        let deadline = Instant::now() + self.timeout;
        let status = loop {
            if let Some(status) = child.try_wait()? {
                break Some(status);
            }
            if Instant::now() >= deadline {
                let _ = child.kill();
                let _ = child.wait();
                break None;
            }
            thread::sleep(Duration::from_millis(2));
        };
        // Grandchildren may hold the pipes open after the child is gone, so
        // the readers are only waited for until the deadline (plus a short
        // grace period for output already written).
        let grace = Duration::from_millis(200);
        let remaining = |now: Instant| deadline.saturating_duration_since(now) + grace;
        let out = out_rx.recv_timeout(remaining(Instant::now()));
        let err = err_rx.recv_timeout(remaining(Instant::now())).unwrap_or_default();
        let out = match (status, out) {
            (Some(s), Err(_)) if s.success() => {
                return Err(Error::ProtocolError {
                    message: "model process exited but its output stream stayed open".into(),
                    stderr: err,
                })
            }
            (_, out) => out.unwrap_or_default(),
        };
        match status {
            None => Err(Error::Timeout {
                seconds: self.timeout.as_secs_f64(),
                stderr: err,
            }),
            Some(s) if !s.success() => Err(Error::ProtocolError {
                message: format!("model process exited with {s}"),
                stderr: err,
            }),
            Some(_) => Ok((out, err)),
        }
    }
}

/// Parse a protocol response of exactly `n` rows with `k` columns.
pub(crate) fn parse_response(bytes: &[u8], n: usize, k: usize) -> std::result::Result<PointCloud, String> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let mut data = Vec::with_capacity(n * k);
    let mut rows = 0;
    for record in reader.records() {
        let record = record.map_err(|e| format!("malformed output: {e}"))?;
        rows += 1;
        if rows > n {
            return Err(format!("more than the requested {n} rows"));
        }
        if record.len() != k {
            return Err(format!("row {rows} has {} values, expected {k}", record.len()));
        }
        for field in record.iter() {
            let v: f64 = field
                .parse()
                .map_err(|_| format!("row {rows}: {field:?} is not a number"))?;
            if !v.is_finite() {
                return Err(format!("row {rows}: non-finite value {field}"));
            }
            data.push(v);
        }
    }
    if rows != n {
        return Err(format!("expected {n} rows, got {rows}"));
    }
    PointCloud::new(data, k).map_err(|e| e.to_string())
}

impl GenerativeModel for ExternalModel {
    fn param_dim(&self) -> usize {
        self.param_dim
    }

    fn output_dim(&self) -> usize {
        self.output_dim
    }

    fn sample(&self, theta: &[f64], n: usize, seed: u64) -> Result<PointCloud> {
        if theta.len() != self.param_dim {
            return Err(Error::DimensionMismatch {
                expected: self.param_dim,
                actual: theta.len(),
            });
        }
        let line = SampleRequest { theta, n, seed }.to_line();
        let (out, stderr) = self.run(&line)?;
        parse_response(&out, n, self.output_dim).map_err(|message| Error::ProtocolError { message, stderr })
    }
}
