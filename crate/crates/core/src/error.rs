use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("point {value} lies outside the domain [{lower}, {upper}]")]
    Domain { value: f64, lower: f64, upper: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("degenerate bound: {0}")]
    Degenerate(String),

    #[error("integer overflow evaluating D*(d={d}, k={k})")]
    Overflow { d: u64, k: u64 },

    #[error("packing construction infeasible at delta={delta}: {reason}")]
    Infeasible { delta: f64, reason: String },

    #[error("packing members {i} and {j} are only {distance:e} apart (need > {delta:e})")]
    SeparationFailure {
        i: usize,
        j: usize,
        distance: f64,
        delta: f64,
    },

    #[error("member {index} leaves the coefficient polyhedron at coordinate {coord}")]
    MembershipFailure { index: usize, coord: usize },

    #[error("cover would contain {size:e} elements, above the cap of {cap}")]
    CoverTooLarge { size: f64, cap: usize },

    #[error("eigensolver did not converge after {iterations} iterations (n={n})")]
    NonConvergence { iterations: usize, n: usize },

    #[error("kernel system is singular even with jitter {jitter:e}")]
    Singular { jitter: f64 },

    #[error("solver residual {residual:e} exceeds tolerance {tolerance:e}")]
    Residual { residual: f64, tolerance: f64 },

    #[error("bracket failure: {0}")]
    Bracket(String),

    #[error("membership certificate failed: {0}")]
    Certificate(String),

    #[error("{failed} of {total} replications failed")]
    TooManyFailures { failed: usize, total: usize },
}
