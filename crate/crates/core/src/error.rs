use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the fusion engine.
///
/// Variants are grouped by how a caller should react: configuration
/// problems, bad or missing input data, and memory budget violations.
#[derive(Error, Debug)]
pub enum Error {
    #[error("config error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("capacity error: {what} requires {required_bytes} bytes, budget is {budget_bytes} bytes")]
    Capacity {
        what: String,
        required_bytes: u64,
        budget_bytes: u64,
    },

    /// An operation was called in the wrong lifecycle state, e.g. accumulating
    /// into a finalized texture.
    #[error("invalid state: {0}")]
    State(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("image error on {path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// Process exit code for this error class: 2 config, 3 data, 4 capacity.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Data(_) | Error::State(_) | Error::Io { .. } | Error::Image { .. } => 3,
            Error::Capacity { .. } => 4,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
