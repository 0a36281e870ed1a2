use thiserror::Error;

use crate::matcore::ComplexMatrix;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BclError {
    #[error("matrix must be square, got {rows}x{cols}")]
    NonSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("malformed matrix: {0}")]
    MalformedMatrix(String),

    #[error("invalid tolerances: need 0 < structural <= residual < 1 and rank_gap in (0, 1)")]
    InvalidTolerances,

    #[error("matrix is not Hermitian (max deviation {violation:.3e})")]
    NotHermitian { violation: f64 },

    #[error("matrix is not unitary (max deviation {violation:.3e})")]
    NotUnitary { violation: f64 },

    #[error("matrix is not an orthogonal projection (max deviation {violation:.3e})")]
    NotProjection { violation: f64 },

    #[error("matrix is not a self-adjoint contraction (max violation {violation:.3e})")]
    NotContraction { violation: f64 },

    #[error("eigenvalue {lambda} has multiplicity {plus} but -{lambda} has multiplicity {minus}")]
    PairingViolation { lambda: f64, plus: usize, minus: usize },

    #[error("defect operator has a kernel of dimension {dim}")]
    KernelNotEmpty { dim: usize },

    #[error("operation requires a finite spectrum")]
    InfiniteSpectrum,

    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),

    #[error("unitary fails to commute with D (violation {violation:.3e})")]
    CommutationFailure { violation: f64 },

    #[error("lambda = {0} is outside the open interval (0, 1)")]
    LambdaOutOfRange(f64),

    #[error("precondition violated: {0}")]
    PreconditionViolation(String),

    #[error("invalid twist alpha = {re} + {im}i: need |alpha| = 1 and alpha != 1")]
    InvalidTwist { re: f64, im: f64 },

    #[error("index map is not a bijection: {0}")]
    NotBijection(String),

    #[error("basis index outside the spectrum rule: {0}")]
    IndexOutOfRule(String),

    #[error("matrix is not of weighted-shift type: {0}")]
    NotShiftType(String),

    #[error("reducing subspace did not stabilize after {iterations} iterations (partial dim {})", .partial.cols())]
    IterationLimit {
        iterations: usize,
        partial: Box<ComplexMatrix>,
    },
}

pub type Result<T> = std::result::Result<T, BclError>;
