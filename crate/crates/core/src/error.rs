use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("mesh validation failed: {0}")]
    Validation(String),

    #[error("ambiguous classification on face {face}: {reason}")]
    Classification { face: usize, reason: String },

    #[error("capability exceeded: {0}")]
    Capability(String),

    #[error("coefficient error: {0}")]
    Coefficient(String),

    #[error("regime error: {0}")]
    Regime(String),

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("degenerate face: {0}")]
    DegenerateFace(String),

    #[error("local problem on element {element} is not solvable: {reason}")]
    LocalSolvability { element: usize, reason: String },

    #[error("assembly failed on {failed} element(s); first: {first}")]
    Assembly { failed: usize, first: Box<Error> },

    #[error("iterative solver did not converge after {iterations} iterations (residual {residual:.3e})")]
    Convergence {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    #[error("singular system: {0}")]
    Singular(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
