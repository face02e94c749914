use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by the library.
///
/// `SizeCap` is kept distinct from the other configuration errors so that
/// front ends can map it to its own exit status.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph spec `{0}`: {1}")]
    InvalidSpec(String, String),

    #[error("{what} has {actual} vertices, above the cap of {cap}")]
    SizeCap {
        what: String,
        actual: u128,
        cap: u128,
    },

    #[error("invalid explicit graph: {0}")]
    InvalidGraph(String),

    #[error("vertex {vertex} out of range for a graph with {count} vertices")]
    InvalidVertex { vertex: u64, count: usize },

    #[error("operation `{0}` is not supported for explicit graphs")]
    UnsupportedFamily(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("step cap of {cap} exceeded after covering {covered} of {total} vertices")]
    StepCapExceeded { cap: u64, covered: usize, total: usize },

    #[error("iteration cap of {0} exceeded")]
    IterationCap(u64),

    #[error("not enough samples: need at least {need}, got {got}")]
    TooFewSamples { need: usize, got: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed data: {0}")]
    Malformed(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
