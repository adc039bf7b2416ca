//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Tensor/vector dimensions do not line up.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A configuration or argument value is out of its legal range.
    #[error("invalid parameter: {0}")]
    Param(String),

    /// Numeric failure: divergence, non-finite values and the like.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// Explicit time step exceeds the stability limit.
    #[error("CFL violation: dt={dt:.6e} s exceeds limit {limit:.6e} s")]
    Cfl { dt: f64, limit: f64 },

    /// A context with no traces reached an operation that needs at least one.
    #[error("empty context{0}")]
    EmptyContext(String),

    /// Malformed file contents (bad magic, version, CRC, truncation).
    #[error("data format error at byte {offset}: {msg}")]
    Format { offset: u64, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub fn param(msg: impl Into<String>) -> Self {
        Error::Param(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    pub fn format(offset: u64, msg: impl Into<String>) -> Self {
        Error::Format {
            offset,
            msg: msg.into(),
        }
    }
}
