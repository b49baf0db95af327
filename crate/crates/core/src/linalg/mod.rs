//! Sparse and dense linear algebra used by every solver.
//!
//! Summation order is fixed everywhere (row-major, ascending column index) so
//! solver runs are bit-reproducible for a fixed seed.

mod cg;
mod csr;
mod eigen;
pub mod vector;

pub use cg::{conjugate_gradient, CgOutcome};
pub use csr::CsrMatrix;
pub use eigen::{gram_min_eigenvalue, gram_top_eigenvalue, EigenEstimate};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("dimension mismatch in {op}: expected {expected}, got {found}")]
    DimensionMismatch {
        op: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("invalid CSR structure: {0}")]
    InvalidStructure(String),
    #[error("entry ({row}, {col}) outside a {n_rows}x{n_cols} matrix")]
    OutOfBounds {
        row: usize,
        col: usize,
        n_rows: usize,
        n_cols: usize,
    },
    #[error("matrix is empty")]
    Empty,
    #[error("tolerance must be positive, got {0}")]
    BadTolerance(f64),
}
