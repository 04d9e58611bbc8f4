//! Crate-wide error type.

use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: malformed line: {message}")]
    MalformedLine {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("edge references unknown node id \"{id}\" ({path}:{line})")]
    DanglingEndpoint {
        id: String,
        path: PathBuf,
        line: usize,
    },

    #[error("duplicate node id \"{id}\" ({path}:{line})")]
    DuplicateNodeId {
        id: String,
        path: PathBuf,
        line: usize,
    },

    #[error("duplicate triple ({src}, {relation}, {dst}) ({path}:{line})")]
    DuplicateTriple {
        src: String,
        relation: String,
        dst: String,
        path: PathBuf,
        line: usize,
    },

    #[error("inconsistent feature dimension: node \"{id}\" has {got}, expected {expected} ({path}:{line})")]
    FeatureDimension {
        id: String,
        got: usize,
        expected: usize,
        path: PathBuf,
        line: usize,
    },

    #[error("self-loop ({id}) rejected; enable self-loops at load time to allow ({path}:{line})")]
    SelfLoop {
        id: String,
        path: PathBuf,
        line: usize,
    },

    #[error("non-finite feature value for node \"{id}\" ({path}:{line})")]
    NonFiniteFeature {
        id: String,
        path: PathBuf,
        line: usize,
    },

    #[error("invalid node index {index} (graph has {count} nodes)")]
    InvalidNodeIndex { index: usize, count: usize },

    #[error("unknown node id \"{id}\"")]
    UnknownNodeId { id: String },

    #[error("dimension mismatch: {message}")]
    DimensionMismatch { message: String },

    #[error("empty training set")]
    EmptyTrainingSet,

    #[error("non-finite loss at epoch {epoch}: {loss}")]
    NonFiniteLoss { epoch: usize, loss: f64 },

    #[error("target prediction score is non-finite: {value}")]
    NonFiniteScore { value: f64 },

    #[error("cluster count {k} out of range [1, {max}]")]
    ClusterCountOutOfRange { k: usize, max: usize },

    #[error("path query endpoints must differ (got node {index} twice)")]
    IdenticalEndpoints { index: usize },

    #[error("kb parse error at {line}:{col}: {message}")]
    KbParse {
        line: usize,
        col: usize,
        message: String,
    },

    #[error("goal must be ground, found variable \"{variable}\"")]
    NonGroundGoal { variable: String },

    #[error("predicate \"{predicate}\" used with arity {got} but declared with arity {expected}")]
    ArityConflict {
        predicate: String,
        got: usize,
        expected: usize,
    },

    #[error("checkpoint format error: {message}")]
    Checkpoint { message: String },

    #[error("all evidence channels are disabled")]
    AllChannelsDisabled,

    #[error("config error: {message}")]
    Config { message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for the CLI: 1 = usage/config, 2 = data validation.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } | Error::Config { .. } | Error::Checkpoint { .. } => 1,
            Error::EmptyTrainingSet | Error::NonFiniteLoss { .. } => 1,
            Error::AllChannelsDisabled => 1,
            _ => 2,
        }
    }
}
