use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("range error at order {order}, argument {argument}: {reason}")]
    Range {
        order: f64,
        argument: f64,
        reason: &'static str,
    },

    #[error("kernel singularity: |x - y| = {distance:e} is below the floor {floor:e}")]
    Singularity { distance: f64, floor: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter `{key}`: {reason}")]
    InvalidParameter { key: String, reason: String },

    #[error("malformed magic at byte 0: {found:#010x}")]
    MalformedMagic { found: u32 },

    #[error("unsupported IDX type {magic:#010x} (expected 0x00000803 image file)")]
    UnsupportedType { magic: u32 },

    #[error("truncated file: expected {expected} bytes, found {actual} (payload starts at byte {offset})")]
    Truncated {
        expected: u64,
        actual: u64,
        offset: u64,
    },

    #[error("corrupt header: {0}")]
    CorruptHeader(String),

    #[error("unsupported format version {found} (reader supports {supported})")]
    VersionMismatch { found: u32, supported: u32 },

    #[error("no atom of the prior lies within radius {radius} of the observation")]
    EmptyBall { radius: f64 },

    #[error("no training pair survives the truncation radius {delta}")]
    EmptyAfterFilter { delta: f64 },

    #[error("non-finite state after {step} steps")]
    NonFiniteState { step: usize },

    #[error("spec parse error at line {line}: {reason}")]
    SpecParse { line: usize, reason: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            key: key.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
