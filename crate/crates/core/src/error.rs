use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("column {0} has (near) zero norm")]
    ZeroColumn(usize),
    #[error("embedding dimension mismatch: {left} vs {right}")]
    DimMismatch { left: usize, right: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("matrix has no rows or no columns")]
    EmptyMatrix,
    #[error("frame has no objects")]
    EmptyFrame,
    #[error("distribution length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("loss is not finite at the evaluation point")]
    NonFiniteLoss,
    #[error("invalid scenario: {0}")]
    InvalidSpec(String),
    #[error("frame {t} with interval {interval} reaches before the first frame")]
    OutOfRange { t: usize, interval: usize },
    #[error("degenerate box (non-positive width or height)")]
    DegenerateBox,
    #[error("kalman state became non-finite")]
    NonFiniteState,
    #[error("frames are not in increasing order at frame {0}")]
    NonMonotoneFrames(u32),
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("line {line}: ground-truth record requires an identity >= 1")]
    IdRequired { line: usize },
    #[error("invalid record: {0}")]
    InvalidRecord(String),
    #[error("embedding sidecar header mismatch: {0}")]
    HeaderMismatch(String),
    #[error("embedding count {embeddings} does not match record count {records}")]
    CountMismatch { records: usize, embeddings: usize },
    #[error("ground truth is empty")]
    EmptyGroundTruth,
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
