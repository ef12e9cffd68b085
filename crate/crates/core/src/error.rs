use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by graph construction, eigensolvers, dataset IO and training.
#[derive(Debug, Error)]
pub enum Error {
    #[error("validation error: {0}")]
    Validation(String),
    #[error("capacity error: {0}")]
    Capacity(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("format error in {path}:{line}: {message}")]
    Format {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

impl Error {
    /// Stable class name used in machine-readable error lines.
    pub fn class(&self) -> &'static str {
        match self {
            Error::Validation(_) => "ValidationError",
            Error::Capacity(_) => "CapacityError",
            Error::Numerical(_) => "NumericalError",
            Error::Io { .. } => "IoError",
            Error::Format { .. } => "FormatError",
        }
    }

    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn capacity(msg: impl Into<String>) -> Self {
        Error::Capacity(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
