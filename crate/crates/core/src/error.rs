use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// Two distinct paths land on the same integer delay-Doppler tap.
    #[error("paths {first} and {second} both quantize to tap (l = {l}, k = {k})")]
    TapCollision {
        first: usize,
        second: usize,
        l: usize,
        k: i64,
    },

    #[error("dense oracle refused: MN = {mn} exceeds the cap of {cap}")]
    ResourceLimit { mn: usize, cap: usize },

    #[error("embedded-pilot guard region of {needed} bins does not fit a frame of {available} bins")]
    Layout { needed: usize, available: usize },

    #[error("unknown scheme `{0}`")]
    UnknownScheme(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("config: {0}")]
    Config(String),

    #[error("cannot access {}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
