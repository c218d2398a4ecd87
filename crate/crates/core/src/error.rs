use thiserror::Error;

/// Errors produced by the update formulas, problem oracles, solvers and the
/// experiment runner.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid split dimensions n={n}, m={m}")]
    InvalidDims { n: usize, m: usize },

    #[error("step is numerically zero (norm {norm:e})")]
    ZeroStep { norm: f64 },

    /// A rank-1 correction has a denominator too close to zero. For the
    /// Sherman-Woodbury inverse update this is the signal to fall back to a
    /// dense inverse of the updated estimate.
    #[error("near-singular denominator {value:e} in {context}")]
    NearSingularDenominator { context: &'static str, value: f64 },

    #[error("updated Jacobian estimate is numerically singular")]
    SingularUpdate,

    #[error("iterates diverged at iteration {iter} (non-finite F)")]
    Diverged { iter: usize },

    #[error("point is outside the problem domain")]
    Domain,

    #[error("contract violated: {0}")]
    Contract(String),

    #[error("invariant violated at iteration {iter}: {what}")]
    Invariant { iter: usize, what: String },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unsupported matrix market header: {0}")]
    Unsupported(String),

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
