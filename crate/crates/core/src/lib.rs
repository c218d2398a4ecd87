//! J-symmetric quasi-Newton methods for smooth minimax problems.
//!
//! For `min_x max_w L(x, w)` the operator `F(z) = (∇ₓL, -∇_wL)` has a
//! Jacobian that is J-symmetric, `J ∇F = ∇Fᵀ J` with `J = diag(I, -I)`. The
//! [`update`] module maintains a Jacobian estimate with that structure through
//! a least-change rank-2 secant update, and [`solvers`] drives it with unit
//! steps, a backtracking line search or a trust region.

pub mod dims;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod problems;
pub mod rng;
pub mod solvers;
pub mod update;
pub mod verify;

pub use dims::{apply_j, j_symmetry_residual, PrimalDualPoint, SplitDims};
pub use error::{Error, Result};
pub use problems::MinimaxProblem;
pub use update::{JacobianEstimate, SecantPair};

/// Artifact version recorded in trace headers.
pub fn version_string() -> String {
    format!("{}+g{}", env!("CARGO_PKG_VERSION"), env!("JSYMM_GIT_REV"))
}
