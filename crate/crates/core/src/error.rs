use thiserror::Error;

use crate::graph::NodeId;

#[derive(Debug, Error)]
pub enum DmcError {
    #[error("node {0} is not in the graph")]
    UnknownNode(NodeId),
    #[error("a node cannot be paired with itself ({0})")]
    SelfPair(NodeId),
    #[error("cannot generate a graph with zero nodes")]
    EmptyGraph,
    #[error("probability {name} = {value} is outside [0, 1]")]
    InvalidProbability { name: &'static str, value: f64 },
    #[error("invalid arrival history: {0}")]
    InvalidTheta(String),
    #[error("exhaustive search refused: {nodes} nodes exceeds the cap of {cap}")]
    ExhaustiveCap { nodes: usize, cap: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("ensemble is empty")]
    EmptyEnsemble,
    #[error("ensemble members disagree on the node count ({0} vs {1})")]
    MixedEnsemble(u64, u64),
    #[error("every ensemble member has zero likelihood at the starting point")]
    DegenerateWeights,
    #[error("orders cover different node sets")]
    MismatchedOrders,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{0}")]
    Data(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = DmcError> = std::result::Result<T, E>;
