use thiserror::Error;

use crate::lp::{LpError, Status};

#[derive(Debug, Error)]
pub enum Error {
    /// Bad input: malformed file, out-of-range level, inconsistent dimensions.
    #[error("{0}")]
    Validation(String),
    #[error("{stage}: solver returned {status:?}")]
    Solver { stage: String, status: Status },
    #[error("{stage}: {source}")]
    Lp {
        stage: String,
        #[source]
        source: LpError,
    },
    #[error("{0}")]
    Internal(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    /// Wrap an error with the name of the pipeline stage that produced it.
    pub fn tagged(self, tag: &str) -> Self {
        match self {
            Error::Solver { stage, status } => Error::Solver {
                stage: format!("{tag}/{stage}"),
                status,
            },
            Error::Lp { stage, source } => Error::Lp {
                stage: format!("{tag}/{stage}"),
                source,
            },
            Error::Validation(msg) => Error::Validation(format!("{tag}: {msg}")),
            Error::Internal(msg) => Error::Internal(format!("{tag}: {msg}")),
            other => other,
        }
    }

    /// True for errors caused by user input rather than numerical failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Validation(_) | Error::Io { .. } | Error::Json(_) | Error::Csv(_)
        )
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub(crate) fn lp(stage: &str, source: LpError) -> Self {
        Error::Lp {
            stage: stage.to_string(),
            source,
        }
    }

    pub(crate) fn solver(stage: &str, status: Status) -> Self {
        Error::Solver {
            stage: stage.to_string(),
            status,
        }
    }
}
