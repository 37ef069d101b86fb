use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("bad magic: expected {expected:?}")]
    BadMagic { expected: &'static str },

    #[error("unsupported format version {0}")]
    UnsupportedVersion(u16),

    #[error("truncated: {0}")]
    Truncated(String),

    #[error("dimension overflow: {0}")]
    DimensionOverflow(String),

    #[error("non-finite data: {0}")]
    NonFinite(String),

    #[error("malformed manifest line {line}: {reason}")]
    MalformedManifest { line: usize, reason: String },

    #[error("duplicate id {0:?}")]
    DuplicateId(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("zero-norm embedding for sequence {0}")]
    ZeroNorm(usize),

    #[error("instance too large: {0}")]
    TooLarge(String),

    #[error("non-finite loss at step {step} (lambda = {lambda}, tau = {tau})")]
    NonFiniteLoss { step: usize, lambda: f64, tau: f64 },

    #[error("positive {positive} missing from candidate set of size {candidates}")]
    MissingPositive { positive: usize, candidates: usize },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad input rather than by the environment.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io { .. } | Error::NonFiniteLoss { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
