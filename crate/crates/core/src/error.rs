use std::path::PathBuf;

use thiserror::Error;

use crate::game::{InfosetId, NodeId};

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown node {0}")]
    UnknownNode(NodeId),

    #[error("unknown information set {0}")]
    UnknownInfoset(InfosetId),

    #[error("node {from} is not an ancestor of node {node}")]
    NotAncestor { from: NodeId, node: NodeId },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid tree: {0}")]
    InvalidTree(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("build refused: estimated {estimate} nodes exceeds cap {cap}")]
    BuildRefused { estimate: u128, cap: u128 },

    #[error("partitions belong to different game trees")]
    DifferentTrees,

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("player {player} does not have perfect recall in partition `{partition}`")]
    NotPerfectRecall { player: usize, partition: String },

    #[error("game is not zero-sum")]
    NotZeroSum,

    #[error("no regret guarantee applies: {0}")]
    NoGuarantee(String),

    #[error("pure strategy enumeration needs {count} strategies, cap is {cap}")]
    EnumerationCap { count: u128, cap: u128 },

    #[error("empty action set")]
    EmptyActions,

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("artifact mismatch: {0}")]
    ArtifactMismatch(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv {
            path: path.into(),
            source,
        }
    }
}
