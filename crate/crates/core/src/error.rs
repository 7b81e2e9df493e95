use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid span {span}: {reason}")]
    InvalidSpan { span: String, reason: String },

    #[error("unknown tag `{0}`")]
    UnknownTag(String),

    #[error("unknown entity type `{0}`")]
    UnknownType(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{0}")]
    Validation(String),

    #[error("sentence {index} is misaligned: {reason}")]
    Misaligned { index: usize, reason: String },

    #[error("sentence {0} has no {1} labels")]
    MissingLabels(usize, &'static str),

    #[error("rule `{rule}` does not compile: {source}")]
    Rule {
        rule: String,
        #[source]
        source: regex::Error,
    },

    #[error("config: {0}")]
    Config(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
