//! Error type shared by every stage of the pipeline.

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("cell ({row}, {col}) holds non-numeric token {token:?}")]
    Cell {
        row: usize,
        col: usize,
        token: String,
    },

    #[error("labeling error: {0}")]
    Label(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("unknown gene {0:?}")]
    UnknownGene(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("{0} is not supported for this classifier kind")]
    UnsupportedKind(String),

    #[error("AUC is undefined when truth contains a single class")]
    UndefinedAuc,

    #[error("too many features for exhaustive enumeration: {0} > {1}")]
    TooManyFeatures(usize, usize),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    File { path: PathBuf, message: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
