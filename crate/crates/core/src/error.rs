use thiserror::Error;

use crate::dyngraph::VertexId;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("self-loop on vertex {0}")]
    SelfLoop(VertexId),
    #[error("edge ({0}, {1}) already present")]
    DuplicateEdge(VertexId, VertexId),
    #[error("edge ({0}, {1}) not present")]
    MissingEdge(VertexId, VertexId),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BucketError {
    #[error("vertex {1} already has an entry in the bucket list of {0}")]
    DuplicateEntry(VertexId, VertexId),
    #[error("vertex {1} has no entry in the bucket list of {0}")]
    MissingEntry(VertexId, VertexId),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CoreError {
    #[error("mu = {mu} exceeds the table cap {cap}")]
    MuOutOfRange { mu: usize, cap: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WorkloadError {
    #[error("no legal edge insertion exists")]
    Saturated,
}

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Workload(#[from] WorkloadError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
