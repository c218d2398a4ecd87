//! Primal/dual split of the stacked variable `z = (x, w)` and the signature
//! matrix `J = diag(I_n, -I_m)`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sizes of the primal block `x` (first `n` entries) and the dual block `w`
/// (last `m` entries).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SplitDims {
    n: usize,
    m: usize,
}

impl SplitDims {
    pub fn new(n: usize, m: usize) -> Result<Self> {
        if n + m == 0 {
            return Err(Error::InvalidDims { n, m });
        }
        Ok(Self { n, m })
    }

    pub fn primal(&self) -> usize {
        self.n
    }

    pub fn dual(&self) -> usize {
        self.m
    }

    pub fn total(&self) -> usize {
        self.n + self.m
    }

    pub(crate) fn check_len(&self, len: usize) -> Result<()> {
        if len != self.total() {
            return Err(Error::DimensionMismatch {
                expected: self.total(),
                found: len,
            });
        }
        Ok(())
    }

    pub(crate) fn check_square(&self, mat: &DMatrix<f64>) -> Result<()> {
        self.check_len(mat.nrows())?;
        self.check_len(mat.ncols())
    }

    /// Diagonal of `J` as a dense matrix.
    pub fn j_matrix(&self) -> DMatrix<f64> {
        let mut diag = DVector::from_element(self.total(), 1.0);
        diag.rows_mut(self.n, self.m).fill(-1.0);
        DMatrix::from_diagonal(&diag)
    }
}

/// A point `z = (x, w)` together with its split.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimalDualPoint {
    values: DVector<f64>,
    dims: SplitDims,
}

impl PrimalDualPoint {
    pub fn new(values: DVector<f64>, dims: SplitDims) -> Result<Self> {
        dims.check_len(values.len())?;
        Ok(Self { values, dims })
    }

    pub fn zeros(dims: SplitDims) -> Self {
        Self {
            values: DVector::zeros(dims.total()),
            dims,
        }
    }

    pub fn from_slice(values: &[f64], dims: SplitDims) -> Result<Self> {
        Self::new(DVector::from_column_slice(values), dims)
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn into_values(self) -> DVector<f64> {
        self.values
    }

    pub fn dims(&self) -> SplitDims {
        self.dims
    }

    pub fn primal(&self) -> nalgebra::DVectorView<'_, f64> {
        self.values.rows(0, self.dims.n)
    }

    pub fn dual(&self) -> nalgebra::DVectorView<'_, f64> {
        self.values.rows(self.dims.n, self.dims.m)
    }
}

/// Multiplies `v` by `J`: the dual block is negated.
pub fn apply_j(v: &DVector<f64>, dims: SplitDims) -> Result<DVector<f64>> {
    dims.check_len(v.len())?;
    let mut out = v.clone();
    out.rows_mut(dims.n, dims.m).neg_mut();
    Ok(out)
}

pub(crate) fn apply_j_unchecked(v: &DVector<f64>, n: usize) -> DVector<f64> {
    let mut out = v.clone();
    let m = v.len() - n;
    out.rows_mut(n, m).neg_mut();
    out
}

/// Max-abs entry of `J B - B^T J`. Zero exactly when `B` is J-symmetric.
pub fn j_symmetry_residual(b: &DMatrix<f64>, dims: SplitDims) -> Result<f64> {
    dims.check_square(b)?;
    let d = dims.total();
    let sign = |i: usize| if i < dims.n { 1.0 } else { -1.0 };
    let mut worst = 0.0f64;
    for i in 0..d {
        for j in 0..d {
            // (J B)_{ij} = sign_i b_ij, (B^T J)_{ij} = b_ji sign_j
            let r = sign(i) * b[(i, j)] - b[(j, i)] * sign(j);
            worst = worst.max(r.abs());
        }
    }
    Ok(worst)
}
