//! Crate-wide error type.
//!
//! Every fallible operation in this crate returns [`Result`]. The variants
//! map onto the CLI exit-code contract: input/validation problems are
//! distinguishable from backend (network/protocol) failures.

use thiserror::Error;

/// Errors produced by the pipeline and its supporting modules.
#[derive(Debug, Error)]
pub enum Error {
    /// A line-delimited input file contained a malformed record.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// An input violated a documented invariant.
    #[error("validation error: {0}")]
    Validation(String),

    /// A remote backend could not be reached or kept failing.
    #[error("backend error after {attempts} attempt(s): {message}")]
    Backend { message: String, attempts: usize },

    /// A remote backend answered, but the payload broke the wire contract.
    #[error("protocol error: {0}")]
    Protocol(String),

    /// A reasoner response did not match the expected schema.
    #[error("schema error: {message} (payload: {payload})")]
    Schema { message: String, payload: String },

    /// A numeric input was outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn validation(message: impl Into<String>) -> Self {
        Error::Validation(message.into())
    }

    pub fn domain(message: impl Into<String>) -> Self {
        Error::Domain(message.into())
    }

    /// True for failures caused by a remote service rather than local input.
    pub fn is_backend(&self) -> bool {
        matches!(
            self,
            Error::Backend { .. } | Error::Protocol(_) | Error::Schema { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
