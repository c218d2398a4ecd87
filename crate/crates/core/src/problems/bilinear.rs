use nalgebra::{DMatrix, DVector};

use super::quadratic::gaussian_matrix;
use super::MinimaxProblem;
use crate::dims::{PrimalDualPoint, SplitDims};
use crate::error::{Error, Result};
use crate::rng::{self, streams};

/// `min_x max_y yᵀAx` with `A` of shape `m × n`.
#[derive(Debug, Clone)]
pub struct BilinearProblem {
    a: DMatrix<f64>,
    dims: SplitDims,
}

impl BilinearProblem {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }
}

pub fn bilinear_problem(a_matrix: DMatrix<f64>) -> Result<BilinearProblem> {
    if a_matrix.is_empty() {
        return Err(Error::Contract("bilinear matrix is empty".into()));
    }
    let dims = SplitDims::new(a_matrix.ncols(), a_matrix.nrows())?;
    Ok(BilinearProblem { a: a_matrix, dims })
}

/// Gaussian `m × n` matrix, entries with variance `1/√max(m, n)`.
pub fn generate_random_bilinear(m: usize, n: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = rng::stream(seed, streams::BILINEAR);
    gaussian_matrix(&mut rng, m, n, m.max(n))
}

impl MinimaxProblem for BilinearProblem {
    fn name(&self) -> &str {
        "bilinear"
    }

    fn dims(&self) -> SplitDims {
        self.dims
    }

    fn eval_f(&self, z: &DVector<f64>) -> Result<DVector<f64>> {
        self.dims.check_len(z.len())?;
        let n = self.dims.primal();
        let m = self.dims.dual();
        let x = z.rows(0, n);
        let y = z.rows(n, m);
        let mut out = DVector::zeros(n + m);
        out.rows_mut(0, n).copy_from(&self.a.tr_mul(&y));
        out.rows_mut(n, m).copy_from(&(-(&self.a * x)));
        Ok(out)
    }

    fn eval_jacobian(&self, z: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.dims.check_len(z.len())?;
        let n = self.dims.primal();
        let m = self.dims.dual();
        let mut jac = DMatrix::zeros(n + m, n + m);
        jac.view_mut((0, n), (n, m)).copy_from(&self.a.transpose());
        jac.view_mut((n, 0), (m, n)).copy_from(&(-&self.a));
        Ok(jac)
    }

    fn known_saddle(&self) -> Option<PrimalDualPoint> {
        Some(PrimalDualPoint::zeros(self.dims))
    }
}
