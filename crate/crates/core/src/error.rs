use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("non-finite value from `{what}` at t = {t}, s = {s}")]
    Evaluation { what: String, t: f64, s: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("derivative sample {index} has |d| = {value} beyond the interior bound {bound}")]
    SingularEvaluation {
        index: usize,
        value: f64,
        bound: f64,
    },

    #[error("could not bracket the projection multiplier")]
    BisectionFailure,

    #[error("tail values of F disagree: F(+S) ~ {plus}, F(-S) ~ {minus}")]
    ScanDivergence { plus: f64, minus: f64 },

    #[error("quadratic lower-bound coefficient k is unavailable for this operator")]
    MissingK,

    #[error("no shift n <= {limit} brings both endpoints below the target level {target}")]
    EndpointSearchFailure { limit: f64, target: f64 },

    #[error("path family collapsed: max {max} does not exceed endpoint level {endpoint_level}")]
    CollapseDetected { max: f64, endpoint_level: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("expression error at column {column}: {message}")]
    Expression { column: usize, message: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for SolverError {
    fn from(e: std::io::Error) -> Self {
        SolverError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, SolverError>;
