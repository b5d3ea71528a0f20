use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the engine. Validation problems are reported as data
/// (see [`crate::model::Violation`]) and only become an error when a caller
/// insists on a valid instance.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid instance: {} violation(s), first: {}", .0.len(), .0.first().map(|v| v.to_string()).unwrap_or_default())]
    Invalid(Vec<crate::model::Violation>),

    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("wrong model builder: {0}")]
    WrongBuilder(String),

    #[error("solution extraction failed: {0}")]
    Extraction(String),

    #[error("numeric failure in LP solver: {0}")]
    Numeric(String),

    #[error("internal consistency error: {0}")]
    Internal(String),

    #[error("unknown name `{0}`")]
    UnknownName(String),

    #[error("override `{key}`: {message}")]
    Override { key: String, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
