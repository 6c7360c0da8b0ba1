use thiserror::Error;

/// Errors raised while configuring or running simulations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("lattice size must be between 2 and 1024, got {0}")]
    InvalidSize(usize),
    #[error("probability `{name}` must lie in [0, 1], got {value}")]
    InvalidProbability { name: &'static str, value: f64 },
    #[error("operation requires {expected} noise mode")]
    WrongMode { expected: &'static str },
    #[error("trial count must be at least 1")]
    NoTrials,
    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },
    #[error("invalid value for `{key}`: {message}")]
    InvalidValue { key: String, message: String },
    #[error("unsupported schema `{found}` (expected `{expected}`)")]
    Schema { found: String, expected: &'static str },
    #[error("malformed data: {0}")]
    Data(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
