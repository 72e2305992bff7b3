use thiserror::Error;

use crate::solvers::RunTrace;
use crate::spectral::PerronResult;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("invalid sparse structure: {0}")]
    InvalidStructure(String),

    #[error("missing or zero diagonal entry in row {row}")]
    MissingDiagonal { row: usize },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("bound inapplicable: weighted column sum rho[{index}] = {rho} is not below 1")]
    BoundInapplicable { index: usize, rho: f64 },

    #[error("relaxation parameter omega = {omega} outside admissible interval (0, {cap}) = (0, 2/(1+rho))")]
    OmegaOutOfRange { omega: f64, cap: f64 },

    #[error("power iteration did not converge in {} iterations (residual {:.3e})", .0.iterations, .0.residual)]
    PerronNotConverged(Box<PerronResult>),

    #[error("{method} did not converge within {iterations} iterations")]
    NotConverged { method: &'static str, iterations: usize },

    #[error("conjugate gradient breakdown (operator not positive definite?)")]
    CgBreakdown,

    #[error("iteration diverged after {} relaxations", .0.relaxations)]
    Diverged(Box<RunTrace>),

    #[error("row {row} has zero norm")]
    ZeroRow { row: usize },

    #[error("matrix market: {0}")]
    MatrixMarket(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
