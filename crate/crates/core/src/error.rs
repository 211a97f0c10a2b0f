use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by problem oracles, update rules, solvers and I/O.
#[derive(Debug, Error)]
pub enum TecuError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported update: {0}")]
    UnsupportedUpdate(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("internal invariant violated: {0}")]
    InvariantViolation(String),

    #[error("oracle failure at {context}: {source}")]
    Oracle {
        context: String,
        #[source]
        source: Box<TecuError>,
    },

    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl TecuError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        TecuError::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        TecuError::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad user input rather than a failed run.
    pub fn is_config_error(&self) -> bool {
        matches!(self, TecuError::Config(_) | TecuError::InvalidArgument(_))
    }
}

pub type Result<T, E = TecuError> = std::result::Result<T, E>;
