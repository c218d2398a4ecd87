//! Small dense helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

/// Dense inverse through LU with partial pivoting. `None` when the matrix is
/// singular or the result is not finite.
pub fn invert(mat: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let inv = mat.clone().lu().try_inverse()?;
    inv.iter().all(|v| v.is_finite()).then_some(inv)
}

/// Induced 1-norm (max column sum).
pub fn norm_1(mat: &DMatrix<f64>) -> f64 {
    mat.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Reciprocal 1-norm condition number from a matrix and its inverse.
pub fn rcond(mat: &DMatrix<f64>, inv: &DMatrix<f64>) -> f64 {
    let denom = norm_1(mat) * norm_1(inv);
    if denom.is_finite() && denom > 0.0 {
        1.0 / denom
    } else {
        0.0
    }
}

/// Largest singular value.
pub fn spectral_norm(mat: &DMatrix<f64>) -> f64 {
    if mat.is_empty() {
        return 0.0;
    }
    mat.singular_values().max()
}

/// Max-abs entry of `a * b - I`.
pub fn identity_residual(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let mut prod = a * b;
    for i in 0..prod.nrows().min(prod.ncols()) {
        prod[(i, i)] -= 1.0;
    }
    prod.amax()
}

pub(crate) fn all_finite(v: &DVector<f64>) -> bool {
    v.iter().all(|x| x.is_finite())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn invert_singular_is_none() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(invert(&m).is_none());
    }

    #[test]
    fn rcond_of_identity_is_one() {
        let eye = DMatrix::<f64>::identity(4, 4);
        assert_eq!(rcond(&eye, &eye), 1.0);
    }

    #[test]
    fn spectral_norm_of_diagonal() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -3.0, 2.0]));
        assert!((spectral_norm(&m) - 3.0).abs() < 1e-12);
    }
}
