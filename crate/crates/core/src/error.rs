use std::path::PathBuf;

use thiserror::Error;

use crate::graph::NodeId;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("node {0} not found")]
    NodeNotFound(NodeId),

    #[error("partition has a single cluster, no gateway nodes")]
    EmptyGateway,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("nodes not reached: {0:?}")]
    Coverage(Vec<NodeId>),

    #[error("covariance for candidate {candidate} is not positive definite")]
    NotPositiveDefinite { candidate: NodeId },

    #[error("no observed entries, nothing to recover from")]
    Unrecoverable,

    #[error("linear constraints are infeasible (phase-one residual {residual:e})")]
    Infeasible { residual: f64 },

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
