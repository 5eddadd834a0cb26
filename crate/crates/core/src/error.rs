use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library layer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    DimensionMismatch {
        expected: (u32, u32),
        actual: (u32, u32),
    },
    #[error("invalid mask: {0}")]
    InvalidMask(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("engine used before init")]
    NotInitialized,
    #[error("batch has no anchor with both a positive and a negative")]
    NoValidAnchor,
    #[error("instance mismatch at frame {frame}: {detail}")]
    InstanceMismatch { frame: u64, detail: String },
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },
    #[error("bad flow data: {0}")]
    Flow(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn dims(expected: (u32, u32), actual: (u32, u32)) -> Self {
        Error::DimensionMismatch { expected, actual }
    }

    /// True for errors that indicate inconsistent (rather than malformed) inputs.
    pub fn is_consistency(&self) -> bool {
        matches!(
            self,
            Error::DimensionMismatch { .. } | Error::InstanceMismatch { .. }
        )
    }
}
