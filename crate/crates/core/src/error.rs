use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by models, decoders, metrics and the benchmark harness.
#[derive(Debug, Error)]
pub enum Error {
    /// Caller supplied data that violates an operation's precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A model, generation or plan parameter is out of range.
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    /// An internal contract between two operations was broken.
    #[error("contract violation: {0}")]
    ContractViolation(String),

    /// Corpus text could not be turned into a model.
    #[error("ingestion error: {0}")]
    Ingestion(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A benchmark cell failed; wraps the underlying error with its location.
    #[error("{cell}: {source}")]
    Cell {
        cell: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by configuration or user input rather than by
    /// the runtime environment.
    pub fn is_config(&self) -> bool {
        match self {
            Error::InvalidConfig(_) | Error::Ingestion(_) => true,
            Error::Cell { source, .. } => source.is_config(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
