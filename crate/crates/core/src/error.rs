use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid topology: {0}")]
    Topology(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("half width must be positive, received {0}")]
    NonPositiveHalfWidth(f64),

    #[error("keypoint {0} is visible but has non-finite coordinates")]
    NonFiniteKeypoint(usize),

    #[error("cannot compose an empty list of maps")]
    EmptyComposition,

    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: String, found: String },

    #[error("scheme {scheme} does not match the supplied structure losses: {reason}")]
    SchemeMismatch { scheme: String, reason: String },

    #[error("no visible keypoint to bound")]
    NoVisibleKeypoints,

    #[error("record {record}: bounding box has zero dimension")]
    DegenerateBox { record: String },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("invalid thresholds: {0}")]
    Thresholds(String),

    #[error("{path}:{line}: record {record}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        record: String,
        message: String,
    },

    #[error("unknown annotation format `{0}`")]
    UnknownFormat(String),

    #[error("tensor format: {0}")]
    TensorFormat(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
