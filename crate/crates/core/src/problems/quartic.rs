use nalgebra::{DMatrix, DVector};

use super::MinimaxProblem;
use crate::dims::SplitDims;
use crate::error::Result;

/// Two-dimensional nonconvex-nonconcave example
/// `L(x, y) = (x²-1)(x²-9) + Axy - (y²-1)(y²-9)`.
///
/// `(0, 0)` is stationary for every `A`, but it is not the only zero of `F`
/// for small `A`, so no saddle is advertised.
#[derive(Debug, Clone)]
pub struct QuarticProblem {
    a: f64,
    dims: SplitDims,
}

pub fn quartic_problem(a_scalar: f64) -> QuarticProblem {
    QuarticProblem {
        a: a_scalar,
        dims: SplitDims::new(1, 1).expect("1 + 1 > 0"),
    }
}

impl QuarticProblem {
    pub fn interaction(&self) -> f64 {
        self.a
    }
}

impl MinimaxProblem for QuarticProblem {
    fn name(&self) -> &str {
        "quartic"
    }

    fn dims(&self) -> SplitDims {
        self.dims
    }

    fn eval_f(&self, z: &DVector<f64>) -> Result<DVector<f64>> {
        self.dims.check_len(z.len())?;
        let (x, y) = (z[0], z[1]);
        Ok(DVector::from_vec(vec![
            4.0 * x * x * x - 20.0 * x + self.a * y,
            -self.a * x + 4.0 * y * y * y - 20.0 * y,
        ]))
    }

    fn eval_jacobian(&self, z: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.dims.check_len(z.len())?;
        let (x, y) = (z[0], z[1]);
        Ok(DMatrix::from_row_slice(
            2,
            2,
            &[12.0 * x * x - 20.0, self.a, -self.a, 12.0 * y * y - 20.0],
        ))
    }
}
