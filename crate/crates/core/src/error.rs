use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("no nodes")]
    EmptyGraph,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("damping factor {0} outside the admissible range")]
    InvalidAlpha(f64),

    #[error("zero start vector")]
    ZeroVector,

    #[error("core space is empty; use full-operator power iteration for this decomposition")]
    EmptyCore,

    #[error("no invariant subspaces")]
    NoSubspaces,

    #[error("subspace {id} has dimension {dim}, above the dense limit {limit}")]
    SubspaceTooLarge { id: usize, dim: usize, limit: usize },

    #[error("matrix dimension {n} exceeds dense limit {limit}")]
    DenseLimit { n: usize, limit: usize },

    #[error("dense eigensolver failed to converge")]
    EigenSolver,

    #[error("fit failed: {0}")]
    Fit(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
