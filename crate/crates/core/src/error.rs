use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid layer sizes {0:?}: need at least two positive sizes")]
    InvalidLayerSizes(Vec<usize>),

    #[error("shape mismatch in {context}: expected {expected}, got {actual}")]
    Shape {
        context: &'static str,
        expected: String,
        actual: String,
    },

    #[error("non-finite value in {context}: {detail}")]
    NonFinite { context: &'static str, detail: String },

    #[error("unknown {kind} `{id}`")]
    Unknown { kind: &'static str, id: String },

    #[error("reward `{reward}` is defined for `{reward_env}`, not `{env}`")]
    EnvMismatch {
        reward: String,
        reward_env: String,
        env: String,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dataset has no reward channel; relabel it first")]
    Unlabeled,

    #[error("not enough source episodes: need {needed}, have {available}")]
    InsufficientEpisodes { needed: usize, available: usize },

    #[error("batch of {batch} is too small for k={k} nearest neighbours")]
    BatchTooSmall { batch: usize, k: usize },

    #[error("format error in {path:?}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("i/o error on {path:?}: {source}")]
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

impl Error {
    pub(crate) fn shape(context: &'static str, expected: impl ToString, actual: impl ToString) -> Self {
        Error::Shape {
            context,
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            reason: reason.into(),
        }
    }
}
