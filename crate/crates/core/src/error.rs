use thiserror::Error;

use crate::ray::Side;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not Hermitian: deviation {deviation:e} exceeds tolerance {tol:e}")]
    NonHermitian { deviation: f64, tol: f64 },
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("eigenvalue {eigenvalue} violates the declared {sign} sign")]
    SignViolation { eigenvalue: f64, sign: &'static str },
    #[error("matrix is not unitary: deviation {deviation:e} exceeds tolerance {tol:e}")]
    NotUnitary { deviation: f64, tol: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("propagator exponent {exponent} exceeds the cap {cap}")]
    Overflow { exponent: f64, cap: f64 },
    #[error("bad grid: {0}")]
    BadGrid(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("grid too coarse: need at least {needed} nodes, found {found}")]
    GridTooCoarse { needed: usize, found: usize },
    #[error("non-finite sample value")]
    NonFinite,
    #[error("{side} ray does not decay at its far end: |u| = {magnitude:e}")]
    TruncationUnsound { side: Side, magnitude: f64 },
    #[error("endpoints must satisfy a < b (a = {a}, b = {b})")]
    InvalidInterval { a: f64, b: f64 },
    #[error("lambda = {re} + {im}i lies on the imaginary axis")]
    OnAxis { re: f64, im: f64 },
    #[error("vector is not in the admissible subspace (distance {distance:e})")]
    NotInKernel { distance: f64 },
    #[error("vector is not unit norm (norm {norm})")]
    NotUnitVector { norm: f64 },
    #[error("csv: {0}")]
    Csv(String),
}

pub type Result<T> = std::result::Result<T, Error>;
