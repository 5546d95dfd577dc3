//! Sparse symmetric linear algebra: SPD solves, generalized eigenproblems
//! and numerical null spaces.

mod cholesky;
mod eigen;
mod solve;
mod sparse;

pub use cholesky::{rcm_ordering, EnvelopeCholesky};
pub use eigen::{
    b_orthonormalize, eig_smallest, eig_smallest_dense, null_space, null_space_pencil, orthonormal_complement,
    Deflation, EigMethod, EigOptions, EigenResult, NullSpace, DEFAULT_EIG_TOL, DEFAULT_NULL_TOL,
};
pub use solve::{pcg, solve_spd, SpdFactor, DEFAULT_SOLVE_TOL};
pub use sparse::SparseMatrix;

/// Dimension below which dense factorizations are used.
pub const DENSE_CROSSOVER: usize = 2000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinalgError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not positive definite (pivot at row {index})")]
    NotPositiveDefinite { index: usize },
    #[error("right-hand form B is not positive definite on the search space")]
    IndefiniteB,
    #[error("no convergence after {iterations} iterations, residual {residual:e}")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("breakdown: {0}")]
    Breakdown(String),
}
