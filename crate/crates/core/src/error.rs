use thiserror::Error;

/// Errors raised by the numerical kernels and solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },

    #[error("matrix data has {got} entries, expected {expected}")]
    BadLength { expected: usize, got: usize },

    #[error("matrix contains a non-finite entry")]
    NonFinite,

    #[error("matrix is not positive semidefinite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("matrix is singular (smallest eigenvalue {min_eigenvalue:e})")]
    SingularMatrix { min_eigenvalue: f64 },

    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps")]
    EigenNoConvergence { sweeps: usize },

    #[error("fixed-point iteration did not converge within {max_iter} steps")]
    MaxIterExceeded { max_iter: usize },

    #[error("covariance matrices do not commute")]
    NotCommuting,

    #[error("quantile level {0} outside (0, 1)")]
    OutOfRange(f64),

    #[error("enumeration needs {couplings} couplings, cap is {cap}")]
    TooLarge { couplings: f64, cap: f64 },

    #[error("series has {len} points, need at least {min}")]
    TooShort { len: usize, min: usize },

    #[error("no covariance is positive definite")]
    NoPositiveDefinite,

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
