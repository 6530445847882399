use thiserror::Error;

/// Errors produced anywhere in the estimation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("duplicate points: rows {first} and {second} are identical")]
    DuplicatePoints { first: usize, second: usize },

    #[error("non-finite input value at row {row}, column {col}")]
    NonFiniteInput { row: usize, col: usize },

    #[error("label count {labels} does not match node count {nodes}")]
    LabelMismatch { labels: usize, nodes: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("domain error: {0}")]
    DomainError(String),

    #[error("quadrature failed to reach tolerance {tolerance:e} (estimated error {estimate:e})")]
    QuadratureFailure { tolerance: f64, estimate: f64 },

    #[error("design matrix is rank deficient (condition estimate {condition:e})")]
    RankDeficient { condition: f64 },

    #[error("normal equations are numerically singular (condition estimate {condition:e})")]
    SingularNormalEquations { condition: f64 },

    #[error("solver did not converge within {iterations} iterations")]
    NonConvergence { iterations: usize },

    #[error("generative model failed on job {job}: {source}")]
    ModelFailure {
        job: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("failed to spawn model process: {message}")]
    SpawnFailure { message: String },

    #[error("model process timed out after {seconds} s; stderr: {stderr}")]
    Timeout { seconds: f64, stderr: String },

    #[error("model protocol error: {message}; stderr: {stderr}")]
    ProtocolError { message: String, stderr: String },

    #[error("sample covariance is singular (condition estimate {condition:e})")]
    SingularCovariance { condition: f64 },

    #[error("weight {index} is zero; log-determinant undefined")]
    SingularWeight { index: usize },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("shape error: {0}")]
    ShapeError(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
