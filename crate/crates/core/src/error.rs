use thiserror::Error;

/// Errors raised by the numerical kernels and estimators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix contains a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("matrix must have at least one row and one column")]
    Empty,

    #[error("matrix is not symmetric positive definite (pivot {pivot:e} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("matrix is not positive semidefinite (smallest pivot {min_pivot:e})")]
    NotPsd { min_pivot: f64 },

    #[error("matrix power overflowed; the matrix is far from stable")]
    Overflow,

    #[error("iteration did not converge within {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("LP solution is not optimal")]
    NotOptimal,

    #[error("simplex exceeded {0} pivots")]
    PivotLimit(usize),

    #[error("series of length {t_len} is too short for lag order {p}")]
    SeriesTooShort { t_len: usize, p: usize },

    #[error("model is not stationary")]
    NotStationary,

    #[error("transition matrix spectral norm {0} is not below one")]
    UnstableModel(f64),

    #[error("all {0} column programs are infeasible")]
    AllColumnsInfeasible(usize),

    #[error("cross-validation window does not fit: {0}")]
    WindowTooLarge(String),

    #[error("invalid parameters: {0}")]
    BadParams(String),

    #[error("cannot rescale the zero matrix")]
    ZeroMatrix,

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
