use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by every fallible operation in the crate.
#[derive(Debug, Error)]
pub enum NdsError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("degenerate camera geometry: {0}")]
    DegenerateGeometry(String),

    #[error("ingestion error: {0}")]
    Ingestion(String),

    #[error("verification failed for {} sample(s): {}", .ids.len(), .ids.join(", "))]
    VerifyFailed { ids: Vec<String> },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("image codec error on {path}: {source}")]
    Codec {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl NdsError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        NdsError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the command-line front end: 2 for a failed
    /// verification pass, 1 for everything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            NdsError::VerifyFailed { .. } => 2,
            _ => 1,
        }
    }
}

pub type Result<T, E = NdsError> = std::result::Result<T, E>;
