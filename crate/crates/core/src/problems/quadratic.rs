use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::MinimaxProblem;
use crate::dims::{PrimalDualPoint, SplitDims};
use crate::error::{Error, Result};
use crate::rng::{self, streams};

/// Data of `L(x, w) = ½(x-x*)ᵀD(x-x*) + (w-w*)ᵀA(x-x*) - ½(w-w*)ᵀC(w-w*)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticSpec {
    /// `n × n`, symmetric PSD.
    pub d_matrix: DMatrix<f64>,
    /// `m × m`, symmetric PSD.
    pub c_matrix: DMatrix<f64>,
    /// `m × n` coupling.
    pub a_matrix: DMatrix<f64>,
    pub x_star: DVector<f64>,
    pub w_star: DVector<f64>,
    /// Scale applied to the diagonal blocks when generated.
    pub alpha: f64,
}

/// Convex-concave quadratic; `F` is affine with constant Jacobian.
#[derive(Debug, Clone)]
pub struct QuadraticProblem {
    spec: QuadraticSpec,
    jacobian: DMatrix<f64>,
    saddle: DVector<f64>,
    dims: SplitDims,
}

impl QuadraticProblem {
    pub fn spec(&self) -> &QuadraticSpec {
        &self.spec
    }
}

fn shape_error(what: &str, expected: (usize, usize), found: (usize, usize)) -> Error {
    Error::Contract(format!(
        "{what} has shape {}x{}, expected {}x{}",
        found.0, found.1, expected.0, expected.1
    ))
}

pub fn quadratic_problem(spec: QuadraticSpec) -> Result<QuadraticProblem> {
    let n = spec.x_star.len();
    let m = spec.w_star.len();
    let dims = SplitDims::new(n, m)?;
    for (what, mat, shape) in [
        ("D", &spec.d_matrix, (n, n)),
        ("C", &spec.c_matrix, (m, m)),
        ("A", &spec.a_matrix, (m, n)),
    ] {
        if mat.shape() != shape {
            return Err(shape_error(what, shape, mat.shape()));
        }
    }
    for (what, mat) in [("D", &spec.d_matrix), ("C", &spec.c_matrix)] {
        if (mat - mat.transpose()).amax() > 1e-12 {
            return Err(Error::Contract(format!("{what} is not symmetric")));
        }
    }
    let d = n + m;
    let mut jacobian = DMatrix::zeros(d, d);
    jacobian.view_mut((0, 0), (n, n)).copy_from(&spec.d_matrix);
    jacobian
        .view_mut((0, n), (n, m))
        .copy_from(&spec.a_matrix.transpose());
    jacobian
        .view_mut((n, 0), (m, n))
        .copy_from(&(-&spec.a_matrix));
    jacobian.view_mut((n, n), (m, m)).copy_from(&spec.c_matrix);
    let mut saddle = DVector::zeros(d);
    saddle.rows_mut(0, n).copy_from(&spec.x_star);
    saddle.rows_mut(n, m).copy_from(&spec.w_star);
    Ok(QuadraticProblem {
        spec,
        jacobian,
        saddle,
        dims,
    })
}

impl MinimaxProblem for QuadraticProblem {
    fn name(&self) -> &str {
        "quadratic"
    }

    fn dims(&self) -> SplitDims {
        self.dims
    }

    fn eval_f(&self, z: &DVector<f64>) -> Result<DVector<f64>> {
        self.dims.check_len(z.len())?;
        Ok(&self.jacobian * (z - &self.saddle))
    }

    fn eval_jacobian(&self, z: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.dims.check_len(z.len())?;
        Ok(self.jacobian.clone())
    }

    fn known_saddle(&self) -> Option<PrimalDualPoint> {
        PrimalDualPoint::new(self.saddle.clone(), self.dims).ok()
    }
}

/// Entries drawn from a normal with variance `1/√size`.
pub(super) fn gaussian_matrix<R: Rng>(
    rng: &mut R,
    rows: usize,
    cols: usize,
    size: usize,
) -> DMatrix<f64> {
    let std = (size.max(1) as f64).powf(-0.25);
    let normal = Normal::new(0.0, std).expect("positive standard deviation");
    DMatrix::from_fn(rows, cols, |_, _| normal.sample(rng))
}

/// Symmetrized Gaussian matrix shifted so that its smallest eigenvalue is
/// at least one.
fn shifted_symmetric<R: Rng>(rng: &mut R, size: usize) -> DMatrix<f64> {
    let raw = gaussian_matrix(rng, size, size, size);
    let mut sym = (&raw + raw.transpose()) * 0.5;
    if size == 0 {
        return sym;
    }
    let lambda_min = SymmetricEigen::new(sym.clone()).eigenvalues.min();
    let shift = lambda_min.abs() + 1.0;
    for i in 0..size {
        sym[(i, i)] += shift;
    }
    sym
}

/// Random instance with `D = αS_D`, `C = αS_C` (independent streams) and
/// Gaussian `A`; the saddle point is placed at the origin.
pub fn generate_random_quadratic(n: usize, m: usize, alpha: f64, seed: u64) -> QuadraticSpec {
    let mut rng_a = rng::stream(seed, streams::QUADRATIC_A);
    let a_matrix = gaussian_matrix(&mut rng_a, m, n, n.max(m));
    let mut rng_d = rng::stream(seed, streams::QUADRATIC_D);
    let d_matrix = shifted_symmetric(&mut rng_d, n) * alpha;
    let mut rng_c = rng::stream(seed, streams::QUADRATIC_C);
    let c_matrix = shifted_symmetric(&mut rng_c, m) * alpha;
    QuadraticSpec {
        d_matrix,
        c_matrix,
        a_matrix,
        x_star: DVector::zeros(n),
        w_star: DVector::zeros(m),
        alpha,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn saddle_point_is_a_zero() {
        let mut spec = generate_random_quadratic(3, 3, 0.5, 11);
        spec.x_star = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        spec.w_star = DVector::from_vec(vec![0.0, 3.0, -1.0]);
        let p = quadratic_problem(spec).unwrap();
        let z = p.known_saddle().unwrap();
        assert_eq!(p.eval_f(z.values()).unwrap().amax(), 0.0);
    }

    #[test]
    fn bilinear_special_case() {
        let spec = QuadraticSpec {
            d_matrix: DMatrix::zeros(1, 1),
            c_matrix: DMatrix::zeros(1, 1),
            a_matrix: DMatrix::from_element(1, 1, 1.0),
            x_star: DVector::zeros(1),
            w_star: DVector::zeros(1),
            alpha: 0.0,
        };
        let p = quadratic_problem(spec).unwrap();
        let f = p.eval_f(&DVector::from_vec(vec![1.0, 0.0])).unwrap();
        assert_eq!(f.as_slice(), &[0.0, -1.0]);
    }

    #[test]
    fn zero_alpha_gives_zero_diagonal_blocks() {
        let spec = generate_random_quadratic(4, 4, 0.0, 3);
        assert_eq!(spec.d_matrix.amax(), 0.0);
        assert_eq!(spec.c_matrix.amax(), 0.0);
    }

    #[test]
    fn shift_bounds_smallest_eigenvalue() {
        let spec = generate_random_quadratic(20, 20, 1.0, 7);
        for mat in [&spec.d_matrix, &spec.c_matrix] {
            let lmin = SymmetricEigen::new(mat.clone()).eigenvalues.min();
            assert!(lmin >= 1.0 - 1e-10, "lambda_min = {lmin}");
        }
        assert_ne!(spec.d_matrix, spec.c_matrix);
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate_random_quadratic(6, 6, 1e-2, 42);
        let b = generate_random_quadratic(6, 6, 1e-2, 42);
        assert_eq!(a, b);
        assert_ne!(a, generate_random_quadratic(6, 6, 1e-2, 43));
    }

    #[test]
    fn rejects_bad_shapes_and_asymmetry() {
        let mut spec = generate_random_quadratic(2, 2, 1.0, 1);
        spec.a_matrix = DMatrix::zeros(3, 2);
        assert!(quadratic_problem(spec).is_err());
        let mut spec = generate_random_quadratic(2, 2, 1.0, 1);
        spec.d_matrix[(0, 1)] += 1.0;
        assert!(quadratic_problem(spec).is_err());
    }
}
