use thiserror::Error;

use crate::graph::NodeId;

pub type Result<T, E = CoreError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CoreError {
    /// An input value was outside its allowed range.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The graph structure is inconsistent (dangling edges, self loops, ...).
    #[error("structural error: {0}")]
    Structure(String),

    /// An edge references nodes that are not part of the graph.
    #[error("edge {source_id} -[{relation}]-> {target} references missing node(s): {}", missing.join(", "))]
    MissingNode {
        source_id: NodeId,
        target: NodeId,
        relation: String,
        missing: Vec<String>,
    },

    /// Scoring configuration cannot be used for a scoring call.
    #[error("configuration error: {0}")]
    Config(String),

    /// Exact path enumeration exceeded the configured cap.
    #[error("path enumeration exceeded {cap} paths; use katz mode for this graph")]
    PathExplosion { cap: usize },

    /// Too many domains for exact Shapley attribution.
    #[error("exact attribution supports at most {max} domains (got {got}); use monte carlo attribution")]
    TooManyDomains { got: usize, max: usize },

    /// The Katz system could not be solved.
    #[error("linear solve failed: {0}")]
    Singular(String),

    #[error("parse error at {path} (line {line}, column {column}): {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
