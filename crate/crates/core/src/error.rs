use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix shape {rows}x{cols} does not match {len} entries")]
    Shape { rows: usize, cols: usize, len: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("state norm {norm} differs from 1 by more than {tol:.1e}")]
    NotNormalized { norm: f64, tol: f64 },

    #[error("trace {trace} differs from 1 by more than {tol:.1e}")]
    BadTrace { trace: f64, tol: f64 },

    #[error("negative eigenvalue {value:.3e} below tolerance")]
    NegativeEigenvalue { value: f64 },

    #[error("completeness violated: max deviation {deviation:.3e} exceeds {tol:.1e}")]
    Completeness { deviation: f64, tol: f64 },

    #[error("negative weight {weight} at entry {index}")]
    NegativeWeight { index: usize, weight: f64 },

    #[error("invalid dephasing matrix: {0}")]
    InvalidDephasing(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("bracket [{lo}, {hi}] does not enclose an interior maximum")]
    NotBracketed { lo: f64, hi: f64 },

    #[error("Choi dimension too large: {entries} entries exceed the limit of {limit}")]
    DimensionOverflow { entries: usize, limit: usize },
}
