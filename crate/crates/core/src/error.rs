use thiserror::Error;

/// Errors produced by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix or vector dimension is zero")]
    EmptyDimension,

    #[error("non-finite entry (NaN or Inf) in input")]
    NonFinite,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("row {0} has zero norm")]
    ZeroRow(usize),

    #[error("column {0} has zero norm")]
    ZeroColumn(usize),

    #[error("invalid control window: {0}")]
    InvalidWindow(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
