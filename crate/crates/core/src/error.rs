use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An input vector or matrix has the wrong dimensions.
    #[error("input shape mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    /// A caller-supplied argument is out of its domain.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// A configuration is internally inconsistent.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// The data violates a precondition (empty, constant band, single class, NaN).
    #[error("data error: {0}")]
    Data(String),

    /// A non-finite value appeared during computation.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// An object is missing state it needs (e.g. normalization metadata).
    #[error("invalid state: {0}")]
    State(String),
}

pub type Result<T> = core::result::Result<T, Error>;
