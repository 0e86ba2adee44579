use std::path::PathBuf;

use thiserror::Error;

use crate::NodeId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model spec: {0}")]
    InvalidSpec(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("models have incompatible specs")]
    SpecMismatch,

    #[error("invalid aggregation weights: {0}")]
    InvalidWeights(String),

    #[error("non-finite parameter after {0}")]
    NonFinite(&'static str),

    #[error("{path}:{line}: {reason}")]
    Csv {
        path: PathBuf,
        line: u64,
        reason: String,
    },

    #[error("cannot partition: {0}")]
    Partition(String),

    #[error("invalid histogram: {0}")]
    Histogram(String),

    #[error("unknown node {0}")]
    UnknownNode(NodeId),

    #[error("no model for candidate {0}")]
    MissingModel(NodeId),

    #[error("peer set is empty")]
    EmptyPeerSet,

    #[error("invalid config `{field}`: {reason}")]
    InvalidConfig { field: String, reason: String },

    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
