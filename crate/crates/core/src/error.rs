use thiserror::Error;

/// Errors produced anywhere in the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("zero-norm vector")]
    ZeroVector,

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("partition retry budget exhausted after {attempts} attempts")]
    PartitionRetryExhausted { attempts: usize },

    #[error("support error: P({index}) > 0 but Q({index}) = 0")]
    Support { index: usize },

    #[error("coalition of size {size} exceeds the exact-enumeration limit of {limit}")]
    CoalitionTooLarge { size: usize, limit: usize },

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("report error: {0}")]
    Report(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
