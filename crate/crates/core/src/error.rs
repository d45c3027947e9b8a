use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("gradient is exactly zero; nothing to solve")]
    ZeroGradient,

    /// `<r, Hr>` was not positive, so the operator is not positive definite
    /// along the current residual.
    #[error("operator is not positive definite along the residual (<r, Hr> = {rhr:e})")]
    OperatorNotPd { rhr: f64 },

    #[error("Krylov breakdown: ||Hp||^2 = {hp_sq:e}")]
    Breakdown { hp_sq: f64 },

    #[error("gradient regularization used before the gradient norm was frozen at this iterate")]
    StaleRegularization,

    #[error("line search failed to find a sufficient step after {trials} trials")]
    LineSearchFailure { trials: usize },

    #[error("direction is not a descent direction (<g, s> = {gs:e})")]
    NotDescent { gs: f64 },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("inconsistent dimensions: {0}")]
    InconsistentDimensions(String),

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error on {path:?}: {source}")]
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
