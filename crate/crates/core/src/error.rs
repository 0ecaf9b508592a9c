use std::path::PathBuf;

use crate::dataset::PointId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite coordinate at index {0}")]
    NonFinite(usize),

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("empty input")]
    EmptyInput,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("point {0} is not present")]
    UnknownPoint(PointId),

    #[error("point {0} is already present")]
    DuplicatePoint(PointId),

    #[error("zero vector has no direction")]
    ZeroVector,

    #[error("query norm {0} exceeds the unit ball")]
    NormOutOfRange(f64),

    #[error("point norm {0} is not 1 (unit-sphere input required)")]
    OffSphere(f64),

    #[error("all collision probabilities vanish for this pair")]
    ZeroWeights,

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("format error: {0}")]
    Format(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
