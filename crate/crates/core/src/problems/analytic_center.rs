use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, Normal, Uniform};

use super::MinimaxProblem;
use crate::dims::{PrimalDualPoint, SplitDims};
use crate::error::{Error, Result};
use crate::rng::{self, streams};

/// Dualized analytic-center problem of `{x : Ax ≤ b}`:
///
/// ```text
/// min_{x,y} max_w  -Σ log yᵢ + wᵀ(Ax - b + y)
/// ```
///
/// The primal block is `(x, y)` of size `n + m`, the dual block is `w` of
/// size `m`, so `F = (Aᵀw, w - 1/y, -(Ax - b + y))`.
#[derive(Debug, Clone)]
pub struct AnalyticCenterProblem {
    a: DMatrix<f64>,
    b: DVector<f64>,
    dims: SplitDims,
}

pub fn analytic_center_problem(
    a_matrix: DMatrix<f64>,
    b: DVector<f64>,
) -> Result<AnalyticCenterProblem> {
    let (m, n) = a_matrix.shape();
    if b.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: b.len(),
        });
    }
    let dims = SplitDims::new(n + m, m)?;
    Ok(AnalyticCenterProblem {
        a: a_matrix,
        b,
        dims,
    })
}

/// Random bounded polytope containing the origin strictly.
///
/// The first `n + 1` rows are `e₁, …, eₙ` and `-(1, …, 1)/√n`, which
/// positively span `Rⁿ` and make the set bounded; the remaining rows are
/// standard Gaussian. Right-hand sides are uniform on `[0.5, 1.5]`.
pub fn generate_random_polytope(
    n: usize,
    m: usize,
    seed: u64,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    if n == 0 || m < n + 1 {
        return Err(Error::Contract(format!(
            "bounded polytope in R^{n} needs at least {} constraints, got {m}",
            n + 1
        )));
    }
    let mut rng = rng::stream(seed, streams::POLYTOPE);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut a = DMatrix::zeros(m, n);
    for i in 0..n {
        a[(i, i)] = 1.0;
    }
    let inv_sqrt = -1.0 / (n as f64).sqrt();
    a.row_mut(n).fill(inv_sqrt);
    for i in n + 1..m {
        for j in 0..n {
            a[(i, j)] = normal.sample(&mut rng);
        }
    }
    let uniform = Uniform::new(0.5, 1.5).expect("valid range");
    let b = DVector::from_fn(m, |_, _| uniform.sample(&mut rng));
    Ok((a, b))
}

impl AnalyticCenterProblem {
    pub fn constraint_matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn rhs(&self) -> &DVector<f64> {
        &self.b
    }

    fn split(&self) -> (usize, usize) {
        (self.a.ncols(), self.a.nrows())
    }

    /// `x = 0`, `y = b` where positive (else 1), `w = 1/y`.
    pub fn default_start(&self) -> PrimalDualPoint {
        let (n, m) = self.split();
        let mut z = DVector::zeros(n + 2 * m);
        for i in 0..m {
            let y = if self.b[i] > 0.0 { self.b[i] } else { 1.0 };
            z[n + i] = y;
            z[n + m + i] = 1.0 / y;
        }
        PrimalDualPoint::new(z, self.dims).expect("layout matches dims")
    }
}

impl MinimaxProblem for AnalyticCenterProblem {
    fn name(&self) -> &str {
        "analytic-center"
    }

    fn dims(&self) -> SplitDims {
        self.dims
    }

    fn default_start(&self) -> Option<PrimalDualPoint> {
        Some(AnalyticCenterProblem::default_start(self))
    }

    fn eval_f(&self, z: &DVector<f64>) -> Result<DVector<f64>> {
        self.dims.check_len(z.len())?;
        if !self.in_domain(z) {
            return Err(Error::Domain);
        }
        let (n, m) = self.split();
        let x = z.rows(0, n);
        let y = z.rows(n, m);
        let w = z.rows(n + m, m);
        let mut out = DVector::zeros(n + 2 * m);
        out.rows_mut(0, n).copy_from(&self.a.tr_mul(&w));
        for i in 0..m {
            out[n + i] = w[i] - 1.0 / y[i];
        }
        let residual = &self.a * x - &self.b + y;
        out.rows_mut(n + m, m).copy_from(&(-residual));
        Ok(out)
    }

    fn eval_jacobian(&self, z: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.dims.check_len(z.len())?;
        if !self.in_domain(z) {
            return Err(Error::Domain);
        }
        let (n, m) = self.split();
        let d = n + 2 * m;
        let mut jac = DMatrix::zeros(d, d);
        jac.view_mut((0, n + m), (n, m))
            .copy_from(&self.a.transpose());
        jac.view_mut((n + m, 0), (m, n)).copy_from(&(-&self.a));
        for i in 0..m {
            let y = z[n + i];
            jac[(n + i, n + i)] = 1.0 / (y * y);
            jac[(n + i, n + m + i)] = 1.0;
            jac[(n + m + i, n + i)] = -1.0;
        }
        Ok(jac)
    }

    fn in_domain(&self, z: &DVector<f64>) -> bool {
        let (n, m) = self.split();
        z.len() == self.dims.total() && z.rows(n, m).iter().all(|&y| y > 0.0)
    }

    fn is_domain_constrained(&self) -> bool {
        true
    }

    fn step_to_boundary(&self, z: &DVector<f64>, s: &DVector<f64>) -> Option<f64> {
        let (n, m) = self.split();
        (0..m)
            .filter(|&i| s[n + i] < 0.0)
            .map(|i| -z[n + i] / s[n + i])
            .reduce(f64::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimensional_center() {
        // no x, a single constraint 0 <= 1
        let p =
            analytic_center_problem(DMatrix::zeros(1, 0), DVector::from_vec(vec![1.0])).unwrap();
        let f = p.eval_f(&DVector::from_vec(vec![1.0, 1.0])).unwrap();
        assert_eq!(f.as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn stationary_point_of_an_interval() {
        // -1 <= x <= 1: center x = 0, y = (1, 1), w = (1, 1)
        let a = DMatrix::from_row_slice(2, 1, &[1.0, -1.0]);
        let p = analytic_center_problem(a, DVector::from_vec(vec![1.0, 1.0])).unwrap();
        let z = DVector::from_vec(vec![0.0, 1.0, 1.0, 1.0, 1.0]);
        assert!(p.eval_f(&z).unwrap().amax() < 1e-15);
    }

    #[test]
    fn outside_domain_is_an_error() {
        let p =
            analytic_center_problem(DMatrix::zeros(1, 0), DVector::from_vec(vec![1.0])).unwrap();
        let z = DVector::from_vec(vec![-0.5, 1.0]);
        assert!(!p.in_domain(&z));
        assert!(matches!(p.eval_f(&z), Err(Error::Domain)));
        assert!(matches!(p.eval_jacobian(&z), Err(Error::Domain)));
    }

    #[test]
    fn boundary_step_length() {
        let p = analytic_center_problem(DMatrix::zeros(2, 0), DVector::from_vec(vec![1.0, 1.0]))
            .unwrap();
        let z = DVector::from_vec(vec![1.0, 2.0, 0.0, 0.0]);
        let s = DVector::from_vec(vec![-0.5, -4.0, 9.0, 9.0]);
        assert_eq!(p.step_to_boundary(&z, &s), Some(0.5));
        let up = DVector::from_vec(vec![1.0, 1.0, -1.0, -1.0]);
        assert_eq!(p.step_to_boundary(&z, &up), None);
    }

    #[test]
    fn random_polytope_contains_origin() {
        let (a, b) = generate_random_polytope(5, 15, 9).unwrap();
        assert_eq!(a.shape(), (15, 5));
        assert!(b.iter().all(|&v| v >= 0.5 && v <= 1.5));
        let p = analytic_center_problem(a, b).unwrap();
        assert!(p.in_domain(p.default_start().values()));
        assert!(generate_random_polytope(5, 5, 9).is_err());
    }
}
