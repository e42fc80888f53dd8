use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid block count {blocks} for dimension {n}")]
    InvalidBlockCount { blocks: usize, n: usize },

    #[error("block index {index} out of range (partition has {blocks} blocks)")]
    IndexOutOfRange { index: usize, blocks: usize },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid step-size: {0}")]
    InvalidStepSize(String),

    #[error("incompatible configuration: {0}")]
    Incompatible(String),

    #[error("empty Fourier mask")]
    EmptyMask,

    #[error("zero signal: {0}")]
    ZeroSignal(&'static str),

    #[error("malformed header in {path}: {reason}")]
    MalformedHeader { path: PathBuf, reason: String },

    #[error("truncated data in {path}")]
    Truncated { path: PathBuf },

    #[error("config error at `{key}`: {reason}")]
    Config { key: String, reason: String },

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

    pub(crate) fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }

    /// True for errors caused by the configuration text itself rather than by
    /// validating its content against the numerical modules.
    pub fn is_config_error(&self) -> bool {
        matches!(self, Error::Config { .. })
    }
}
