//! Error type shared by the whole library.

use std::path::PathBuf;

/// Errors produced by graph loading, metric evaluation, and the detection
/// schemes.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Underlying I/O failure while reading or writing a file.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A line of an input file could not be parsed.
    #[error("parse error at {path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    /// A parameter is outside its documented domain (non-positive scale,
    /// probability outside (0,1), k > n, and so on).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Modularity is undefined on a graph with no edges.
    #[error("modularity is undefined on a graph with zero edge weight")]
    UndefinedModularity,

    /// A node id fell outside the graph it was used with.
    #[error("node {node} out of range for graph with {n} nodes")]
    NodeOutOfRange { node: usize, n: usize },

    /// Two clusterings that must share a node universe do not.
    #[error("clusterings cover different node universes ({left} vs {right} nodes)")]
    UniverseMismatch { left: usize, right: usize },

    /// An operation that needs at least one community received none.
    #[error("clustering has no communities")]
    EmptyClustering,

    /// Non-edge rejection sampling refuses to run on dense graphs.
    #[error("edge density {density:.3} exceeds 0.25; non-edge sampling would thrash")]
    DensityTooHigh { density: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
