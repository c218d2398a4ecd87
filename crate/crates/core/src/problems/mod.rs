//! Minimax test problems behind a common oracle interface.
//!
//! Every problem exposes `F(z) = (∇ₓL, -∇_wL)` and its Jacobian, which has the
//! block form `[[∇ₓₓL, ∇ₓ_wL], [-∇_wₓL, -∇_wwL]]` and is therefore
//! J-symmetric.

mod analytic_center;
mod bilinear;
mod mtx;
mod quadratic;
mod quartic;

use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::dims::{PrimalDualPoint, SplitDims};
use crate::error::Result;

pub use analytic_center::{
    analytic_center_problem, generate_random_polytope, AnalyticCenterProblem,
};
pub use bilinear::{bilinear_problem, generate_random_bilinear, BilinearProblem};
pub use mtx::{load_matrix_market, read_matrix_market, write_matrix_market};
pub use quadratic::{
    generate_random_quadratic, quadratic_problem, QuadraticProblem, QuadraticSpec,
};
pub use quartic::{quartic_problem, QuarticProblem};

/// Oracle bundle for a smooth minimax problem `min_x max_w L(x, w)`.
pub trait MinimaxProblem: fmt::Debug + Send + Sync {
    fn name(&self) -> &str;

    fn dims(&self) -> SplitDims;

    /// `F(z)`. Errors with [`crate::Error::Domain`] outside the open domain.
    fn eval_f(&self, z: &DVector<f64>) -> Result<DVector<f64>>;

    /// Dense `∇F(z)`.
    fn eval_jacobian(&self, z: &DVector<f64>) -> Result<DMatrix<f64>>;

    fn in_domain(&self, _z: &DVector<f64>) -> bool {
        true
    }

    /// Whether the oracle is only defined on a proper subset of `R^{n+m}`.
    fn is_domain_constrained(&self) -> bool {
        false
    }

    /// Supremum of `t ≥ 0` with `z + τ s` in the domain for all `τ ∈ [0, t)`.
    /// `None` means unbounded.
    fn step_to_boundary(&self, _z: &DVector<f64>, _s: &DVector<f64>) -> Option<f64> {
        None
    }

    fn known_saddle(&self) -> Option<PrimalDualPoint> {
        None
    }

    /// Problem-specific starting point, if the problem has a natural one.
    fn default_start(&self) -> Option<PrimalDualPoint> {
        None
    }
}
