use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is not positive definite (pivot {pivot} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },
    #[error("singular matrix")]
    Singular,
    #[error("preconditioner is not positive definite (r·z = {0})")]
    IndefinitePreconditioner(f64),
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    #[error("solver failed for mode {mode} on grid {grid}: {reason}")]
    Solver { mode: usize, grid: usize, reason: String },
    #[error("budget exceeded: {0}")]
    Budget(String),
}

pub type Result<T> = std::result::Result<T, Error>;
