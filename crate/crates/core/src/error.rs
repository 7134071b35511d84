//! Crate-wide error type and exit-code mapping.

use thiserror::Error;

/// Errors produced by the estimation library and experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied value violates an operation's preconditions.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The residual function returned a non-finite value during a solve.
    #[error("non-finite residual at iterate {iterate:?}")]
    NonFiniteResidual { iterate: Vec<f64> },

    /// The EKF innovation covariance could not be inverted.
    #[error("singular innovation covariance")]
    SingularInnovation,

    /// A data file failed to parse.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("config error: {0}")]
    Config(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid(message: impl Into<String>) -> Self {
        Error::InvalidArgument(message.into())
    }

    /// Process exit code for the CLI: 1 validation, 2 numeric failure, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_) | Error::Parse { .. } | Error::Config(_) => 1,
            Error::NonFiniteResidual { .. } | Error::SingularInnovation => 2,
            Error::Io(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
