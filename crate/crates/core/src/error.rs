use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("SVD did not converge for a {rows}x{cols} matrix after {sweeps} sweeps")]
    SvdNoConvergence { rows: usize, cols: usize, sweeps: usize },

    #[error("Hermitian eigensolver did not converge for a {dim}x{dim} matrix")]
    EigenNoConvergence { dim: usize },

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    ShapeMismatch { expected: (usize, usize), found: (usize, usize) },

    #[error("invalid exponent {0}: must be >= 1 or infinite")]
    InvalidExponent(f64),

    #[error("{0}")]
    InvalidArgument(String),

    #[error("problem too large: {0}")]
    TooLarge(String),

    #[error("input is not a Hardy polynomial: {0}")]
    NotHardy(String),

    #[error("invalid config at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
