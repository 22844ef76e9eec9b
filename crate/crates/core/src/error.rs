use thiserror::Error;

/// Errors raised by the bound computations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite entry in matrix {matrix} at ({row}, {col})")]
    NonFiniteEntry {
        matrix: &'static str,
        row: usize,
        col: usize,
    },

    #[error("system is not stable (spectral abscissa {0:.6e} >= 0)")]
    UnstableSystem(f64),

    #[error("resolvent (jwI - A) is singular at w = {0}")]
    SingularResolvent(f64),

    #[error("filter pole must be negative, got {0}")]
    InvalidAlpha(f64),

    #[error("filter degree must be nonnegative, got {0}")]
    NegativeDegree(i64),

    #[error("matrix is identically zero")]
    ZeroMatrix,

    #[error("brute-force oracle supports at most {max} columns, got {got}")]
    TooManyColumns { max: usize, got: usize },

    #[error("time step {dt} is too coarse (must be <= {max})")]
    StepTooCoarse { dt: f64, max: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("conic problem is infeasible")]
    Infeasible,

    #[error("conic solver failed: {0}")]
    NumericalFailure(String),

    #[error("failed to parse system: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
