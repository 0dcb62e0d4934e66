use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{file}:{line}: {message}")]
    Parse {
        file: String,
        line: usize,
        message: String,
    },

    #[error("invalid dataset: {0}")]
    Dataset(String),

    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("unknown POI id {0}")]
    UnknownPoi(u64),

    #[error("keyword {0} is not frequent")]
    NotFrequent(u32),

    #[error("index file version {found} is not supported (expected {expected})")]
    IndexVersion { found: u32, expected: u32 },

    #[error("index file is corrupt: {0}")]
    IndexCorrupt(String),

    #[error("instance too large: {0}")]
    TooLarge(String),

    #[error("RR collection mode does not match the requested estimator")]
    ModeMismatch,

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by malformed input data rather than bad arguments.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::Dataset(_)
                | Error::IndexVersion { .. }
                | Error::IndexCorrupt(_)
                | Error::Io { .. }
        )
    }
}
