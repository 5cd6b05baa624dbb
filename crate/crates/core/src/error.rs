use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("placement {placement} needs d >= {required}, got d = {d}")]
    DimensionTooSmall {
        placement: &'static str,
        required: usize,
        d: usize,
    },

    #[error("learning rate {eta} >= 1; N = {n} is too small")]
    NTooSmall { eta: f64, n: usize },

    #[error("insufficient data: need {needed} samples, have {available}")]
    InsufficientData { needed: usize, available: usize },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("rank-deficient matrix: column {column} collapsed")]
    RankDeficient { column: usize },

    #[error("initialization failed: {0}")]
    InitFailure(String),

    #[error("stream exhausted after {consumed} samples, {requested} requested")]
    StreamExhausted { consumed: usize, requested: usize },

    #[error("empty cluster {cluster} at iteration {iteration}")]
    EmptyCluster { cluster: usize, iteration: usize },

    #[error("did not converge within {iterations} iterations")]
    NotConverged { iterations: usize },

    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
