use std::path::PathBuf;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A required dataset file is missing.
    #[error("missing file: {0}")]
    MissingFile(PathBuf),

    /// I/O failure on a specific path.
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed content in an input file; line numbers are 1-based.
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    /// A value or argument violates a precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A configuration field is out of its legal range.
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    /// The benchmark data cannot support the requested analysis.
    #[error("incomplete results: {0}")]
    IncompleteResults(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
