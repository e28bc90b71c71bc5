use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid depth {0}: must be finite and positive")]
    InvalidDepth(f64),

    #[error("invalid camera intrinsics: {0}")]
    InvalidIntrinsics(String),

    #[error("rotation is not in SO(3): orthonormality error {orthogonality:.3e}, det {det}")]
    InvalidRotation { orthogonality: f64, det: f64 },

    #[error("object has no valid masked depth pixels")]
    EmptyObject,

    #[error("ground-truth pose is required but missing")]
    MissingPose,

    #[error("mode mismatch: expected {expected}, got {got}")]
    ModeMismatch { expected: String, got: String },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    #[error("empty input")]
    EmptyInput,

    #[error("invalid object model: {0}")]
    InvalidModel(String),

    #[error("invalid scene spec: {0}")]
    InvalidSpec(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("parse error in {what} at byte {offset}: {msg}")]
    Parse {
        what: String,
        offset: usize,
        msg: String,
    },

    #[error("unsupported format version in {what}: {found}")]
    UnsupportedVersion { what: String, found: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn parse(what: impl Into<String>, offset: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            what: what.into(),
            offset,
            msg: msg.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
