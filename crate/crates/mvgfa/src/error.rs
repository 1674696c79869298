//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, GfaError>;

#[derive(Debug, Error)]
pub enum GfaError {
    /// Caller handed over something structurally wrong (shape mismatch,
    /// out-of-range parameter, unknown label).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A computation produced a non-finite or otherwise unusable value.
    #[error("numerical error in {context}: {detail}")]
    Numerical { context: String, detail: String },

    /// The requested quantity does not exist for this input (empty trace,
    /// no shared components, fewer than two members in the graph).
    #[error("no result: {0}")]
    NoResult(String),

    /// Malformed input file.
    #[error("parse error at {path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("integrity error: {0}")]
    Integrity(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl GfaError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        GfaError::InvalidInput(msg.into())
    }

    pub fn numerical(context: impl Into<String>, detail: impl Into<String>) -> Self {
        GfaError::Numerical {
            context: context.into(),
            detail: detail.into(),
        }
    }

    pub fn no_result(msg: impl Into<String>) -> Self {
        GfaError::NoResult(msg.into())
    }
}
