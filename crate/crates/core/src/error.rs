use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{source_name}, line {line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("element {element} has non-positive signed area {area:e}")]
    NegativeArea { element: usize, area: f64 },

    #[error("mesh has no elements")]
    EmptyMesh,

    #[error("edge ({0}, {1}) is shared by more than two elements")]
    NonManifoldEdge(usize, usize),

    #[error("directed edge ({0}, {1}) appears in more than one element")]
    DuplicateDirectedEdge(usize, usize),

    #[error("boundary pair ({0}, {1}) is not an edge of the mesh")]
    UnknownBoundaryEdge(usize, usize),

    #[error("boundary pair ({0}, {1}) resolves to an interior edge")]
    InteriorBoundaryEdge(usize, usize),

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid coefficients: {0}")]
    InvalidCoefficients(String),

    #[error("non-finite value {value} of {what} on element {element}")]
    NonFiniteData {
        what: &'static str,
        element: usize,
        value: f64,
    },

    #[error("matrix is singular: {0}")]
    Singular(String),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("time stepping produced a non-finite state at step {0}")]
    BlowUp(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown problem '{0}'")]
    UnknownProblem(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
