use thiserror::Error;

use crate::mrf::NodeId;

/// Errors raised while building models, running inference or searching.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid compatibility matrix: {0}")]
    InvalidPotential(String),

    #[error("distribution lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("class count mismatch: model has {expected} classes, got {found}")]
    ClassCountMismatch { expected: usize, found: usize },

    #[error("self-loop on node {0}")]
    SelfLoop(NodeId),

    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(NodeId, NodeId),

    #[error("duplicate node {0}")]
    DuplicateNode(NodeId),

    #[error("unknown node {0}")]
    UnknownNode(NodeId),

    #[error("({0}, {1}) is not an edge of the model")]
    NotAnEdge(NodeId, NodeId),

    #[error("edge ({0}, {1}) has an endpoint outside the node set")]
    EdgeOutsideNodeSet(NodeId, NodeId),

    #[error("degenerate message {from} -> {to}: unnormalized message is all zero")]
    DegenerateMessage { from: NodeId, to: NodeId },

    #[error("degenerate belief at node {0}: product of prior and messages is all zero")]
    DegenerateBelief(NodeId),

    #[error("node {node} has class {class}, expected 1..={classes}")]
    LabelOutOfRange {
        node: NodeId,
        class: usize,
        classes: usize,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid subgraph: {0}")]
    InvalidSubgraph(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("{path}: {message}")]
    Io { path: String, message: String },

    #[error("invalid document: {0}")]
    Document(String),
}

impl Error {
    /// True for errors caused by bad input data (as opposed to inference failures).
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::DegenerateMessage { .. } | Error::DegenerateBelief(_) | Error::Io { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
