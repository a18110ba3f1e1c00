use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Operand sizes do not fit together (empty input, mismatched products).
    #[error("dimension error: {0}")]
    Dimension(String),

    /// Input has the right size but the wrong structure (e.g. not symmetric).
    #[error("shape error: {0}")]
    Shape(String),

    #[error("non-finite input: {0}")]
    NonFinite(String),

    #[error("matrix is not positive semidefinite: residual pivot {pivot:e} at row {row} (tolerance {tol:e})")]
    NotPsd { row: usize, pivot: f64, tol: f64 },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("eigenvalue iteration did not converge: {converged} of {total} eigenvalues found")]
    EigenNoConvergence { converged: usize, total: usize },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("out of bounds: {0}")]
    Bounds(String),

    #[error("parse error in {path} at line {line}, column {column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
