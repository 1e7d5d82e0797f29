use thiserror::Error;

/// Errors surfaced by every fallible operation in this crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Operands whose dimensions do not compose.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// Values that violate an operation's preconditions (NaN costs,
    /// negative weights, inconsistent labels, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Probability weights that are negative or do not sum to one.
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    /// Instances outside what an operation supports (e.g. the brute-force
    /// solver on non-uniform or oversized problems).
    #[error("unsupported instance: {0}")]
    UnsupportedInstance(String),

    /// Non-finite values produced during optimization; training aborts
    /// rather than continuing with a corrupted state.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// Malformed input files, reported with enough context to locate the
    /// offending record.
    #[error("parse error: {0}")]
    Parse(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
