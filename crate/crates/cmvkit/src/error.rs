use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CmvError {
    #[error("operator norm {norm} exceeds 1 + {tol}")]
    NotAContraction { norm: f64, tol: f64 },

    #[error("expected a square matrix, got {rows}x{cols}")]
    NonSquare { rows: usize, cols: usize },

    #[error("rotation form mismatch: expected {expected}, parameter is {found}")]
    TagMismatch { expected: String, found: String },

    #[error("invalid choice sequence: {0}")]
    InvalidSequence(String),

    #[error("point ({re}, {im}) is outside the open unit disk")]
    OutsideDisk { re: f64, im: f64 },

    #[error("linear solve failed: {0}")]
    SolveFailure(String),

    #[error("Taylor depth exhausted: need {needed} coefficients, have {available}")]
    DepthExhausted { needed: usize, available: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("system is not conservative (residual {residual:e})")]
    NotConservative { residual: f64 },

    #[error("system is not simple (joint Krylov rank {rank} < state dimension {dim})")]
    NotSimple { rank: usize, dim: usize },

    #[error("measure or function is not normalized: {0}")]
    NotNormalized(String),

    #[error("power {requested} exceeds the certified depth {depth}")]
    PowerBudgetExceeded { requested: usize, depth: usize },

    #[error("matrix is not unitary (residual {residual:e})")]
    NotUnitary { residual: f64 },

    #[error("subspace is not cyclic (orbit rank {rank} < dimension {dim})")]
    NotCyclic { rank: usize, dim: usize },

    #[error("bad dimensions: {0}")]
    BadDims(String),
}

pub type Result<T> = std::result::Result<T, CmvError>;
