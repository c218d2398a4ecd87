//! Brute-force oracles and diagnostics.
//!
//! These take a different route from the production code on purpose: the
//! least-change update is recovered by solving the KKT system of the
//! constrained least-squares problem over an explicit basis of J-symmetric
//! matrices, not from the closed form.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::dims::{PrimalDualPoint, SplitDims};
use crate::error::{Error, Result};
use crate::problems::MinimaxProblem;
use crate::update::SecantPair;

/// Largest `n + m` accepted by [`kkt_least_change_oracle`].
pub const KKT_MAX_DIM: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Location {
    Entry(usize, usize),
    Iteration(usize),
}

/// Outcome of an oracle comparison; `passed` iff `max_abs_error <= tolerance`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleReport {
    pub max_abs_error: f64,
    pub location: Option<Location>,
    pub passed: bool,
    pub tolerance: f64,
}

impl OracleReport {
    pub fn new(max_abs_error: f64, location: Option<Location>, tolerance: f64) -> Self {
        Self {
            max_abs_error,
            location,
            passed: max_abs_error <= tolerance,
            tolerance,
        }
    }
}

/// Basis element of the J-symmetric subspace as a sparse list of entries.
type Basis = Vec<(usize, usize, f64)>;

fn jsymm_basis(dims: SplitDims) -> Vec<Basis> {
    let n = dims.primal();
    let d = dims.total();
    let mut basis = Vec::new();
    // symmetric diagonal blocks
    for (lo, hi) in [(0, n), (n, d)] {
        for i in lo..hi {
            basis.push(vec![(i, i, 1.0)]);
            for j in i + 1..hi {
                basis.push(vec![(i, j, 1.0), (j, i, 1.0)]);
            }
        }
    }
    // coupling: B[j, n+i] = a_ij, B[n+i, j] = -a_ij
    for i in n..d {
        for j in 0..n {
            basis.push(vec![(j, i, 1.0), (i, j, -1.0)]);
        }
    }
    basis
}

/// Frobenius-nearest J-symmetric matrix to `b` satisfying `B s = y`, found by
/// solving the KKT system of the equality-constrained least-squares problem.
pub fn kkt_least_change_oracle(
    b: &DMatrix<f64>,
    pair: &SecantPair,
    dims: SplitDims,
) -> Result<DMatrix<f64>> {
    let d = dims.total();
    if d > KKT_MAX_DIM {
        return Err(Error::Contract(format!(
            "KKT oracle supports n + m <= {KKT_MAX_DIM}, got {d}"
        )));
    }
    dims.check_square(b)?;
    dims.check_len(pair.s().len())?;
    let basis = jsymm_basis(dims);
    let p = basis.len();
    debug_assert_eq!(
        p,
        (dims.primal() * (dims.primal() + 1) + dims.dual() * (dims.dual() + 1)) / 2
            + dims.primal() * dims.dual()
    );

    let s = pair.s();
    let mut kkt = DMatrix::zeros(p + d, p + d);
    let mut rhs = DVector::zeros(p + d);
    for (k, elem) in basis.iter().enumerate() {
        kkt[(k, k)] = elem.iter().map(|(_, _, v)| v * v).sum::<f64>();
        rhs[k] = elem.iter().map(|&(r, c, v)| v * b[(r, c)]).sum::<f64>();
        for &(r, c, v) in elem {
            kkt[(p + r, k)] += v * s[c];
            kkt[(k, p + r)] += v * s[c];
        }
    }
    rhs.rows_mut(p, d).copy_from(pair.y());

    let lu = kkt.full_piv_lu();
    if !lu.is_invertible() {
        return Err(Error::Contract("rank-deficient KKT system".into()));
    }
    let sol = lu
        .solve(&rhs)
        .ok_or_else(|| Error::Contract("KKT solve failed".into()))?;
    let mut out = DMatrix::zeros(d, d);
    for (k, elem) in basis.iter().enumerate() {
        for &(r, c, v) in elem {
            out[(r, c)] += v * sol[k];
        }
    }
    Ok(out)
}

/// Central-difference Jacobian. A coordinate whose perturbed points leave the
/// domain has its step halved, at most 8 times.
pub fn finite_difference_jacobian(
    problem: &dyn MinimaxProblem,
    z: &PrimalDualPoint,
    h: f64,
) -> Result<DMatrix<f64>> {
    let dims = problem.dims();
    dims.check_len(z.values().len())?;
    let d = dims.total();
    let base = z.values();
    let mut jac = DMatrix::zeros(d, d);
    for i in 0..d {
        let mut step = h;
        let mut column = None;
        for _ in 0..=8 {
            let mut plus = base.clone();
            let mut minus = base.clone();
            plus[i] += step;
            minus[i] -= step;
            if problem.in_domain(&plus) && problem.in_domain(&minus) {
                if let (Ok(fp), Ok(fm)) = (problem.eval_f(&plus), problem.eval_f(&minus)) {
                    column = Some((fp - fm) / (2.0 * step));
                    break;
                }
            }
            step *= 0.5;
        }
        jac.set_column(i, &column.ok_or(Error::Domain)?);
    }
    Ok(jac)
}

/// Compares `eval_jacobian` against central differences; tolerance is
/// `1e-4 · (1 + ‖∇F‖)` by default.
pub fn check_jacobian(
    problem: &dyn MinimaxProblem,
    z: &PrimalDualPoint,
    h: f64,
) -> Result<OracleReport> {
    let exact = problem.eval_jacobian(z.values())?;
    let fd = finite_difference_jacobian(problem, z, h)?;
    let tol = 1e-4 * (1.0 + exact.norm());
    let (loc, err) = max_abs_diff(&exact, &fd);
    Ok(OracleReport::new(
        err,
        loc.map(|(i, j)| Location::Entry(i, j)),
        tol,
    ))
}

fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> (Option<(usize, usize)>, f64) {
    let mut worst = (None, 0.0);
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            let e = (a[(i, j)] - b[(i, j)]).abs();
            if e > worst.1 || worst.0.is_none() {
                worst = (Some((i, j)), e);
            }
        }
    }
    worst
}

/// `‖(B - ∇F(z*)) s‖ / ‖s‖`.
pub fn dennis_more_ratio(
    b: &DMatrix<f64>,
    jac_star: &DMatrix<f64>,
    s: &DVector<f64>,
) -> Result<f64> {
    if b.shape() != jac_star.shape() || b.ncols() != s.len() {
        return Err(Error::DimensionMismatch {
            expected: b.ncols(),
            found: s.len(),
        });
    }
    let norm = s.norm();
    if !(norm > 0.0) {
        return Err(Error::ZeroStep { norm });
    }
    Ok(((b - jac_star) * s).norm() / norm)
}

/// Checks `m0 - ms >= (‖g‖/2) min(Δ, ‖g‖/‖B‖²)` up to `1e-10 (1 + |m0|)`.
pub fn sufficient_decrease_check(
    m0: f64,
    ms: f64,
    g_norm: f64,
    delta: f64,
    b_norm: f64,
) -> OracleReport {
    let bound = 0.5 * g_norm * delta.min(g_norm / (b_norm * b_norm));
    let bound = if bound.is_nan() { 0.0 } else { bound };
    let shortfall = (bound - (m0 - ms)).max(0.0);
    OracleReport::new(shortfall, None, 1e-10 * (1.0 + m0.abs()))
}

/// Error-free product `a·b = p + e`.
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// Error-free sum `a + b = s + e`.
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// Dot product accumulated in twice the working precision.
pub fn dot_compensated(a: &[f64], b: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut err = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        let (p, ep) = two_prod(x, y);
        let (s, es) = two_sum(sum, p);
        sum = s;
        err += ep + es;
    }
    sum + err
}

/// [`dennis_more_ratio`] recomputed with compensated accumulation.
pub fn dennis_more_ratio_compensated(
    b: &DMatrix<f64>,
    jac_star: &DMatrix<f64>,
    s: &DVector<f64>,
) -> f64 {
    let diff = b - jac_star;
    let rows: Vec<f64> = (0..diff.nrows())
        .map(|i| {
            let row: Vec<f64> = diff.row(i).iter().copied().collect();
            dot_compensated(&row, s.as_slice())
        })
        .collect();
    dot_compensated(&rows, &rows).sqrt() / dot_compensated(s.as_slice(), s.as_slice()).sqrt()
}
