//! Least-change secant updates of the Jacobian estimate.
//!
//! The J-symmetric update is the Frobenius-nearest matrix to `B` that
//! satisfies the secant condition `B⁺ s = y` and keeps the block structure
//! `[[D, Aᵀ], [-A, C]]` with `D`, `C` symmetric:
//!
//! ```text
//! B⁺ = B + (J s (J r)ᵀ + r sᵀ) / sᵀs - (sᵀ J r) J s sᵀ / (sᵀs)²,   r = y - B s
//! ```
//!
//! It is a rank-2 correction whose only denominator is `sᵀs`, so its inverse
//! can be maintained with two Sherman-Woodbury steps.

use nalgebra::{DMatrix, DVector};

use crate::dims::{apply_j_unchecked, j_symmetry_residual, SplitDims};
use crate::error::{Error, Result};
use crate::linalg;

/// Relative tolerance for the J-symmetry invariant.
pub const TOL_SYM: f64 = 1e-8;
/// Relative tolerance for `H B ≈ I`.
pub const TOL_INV: f64 = 1e-8;
/// Relative floor for rank-1 denominators.
pub const EPS_DEN: f64 = 1e-12;

/// Smallest admissible step length at an iterate of norm `z_norm`.
pub fn eps_step(z_norm: f64) -> f64 {
    1e-14 * (1.0 + z_norm)
}

/// A step `s` and the matching change `y = F(z + s) - F(z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SecantPair {
    s: DVector<f64>,
    y: DVector<f64>,
}

impl SecantPair {
    pub fn new(s: DVector<f64>, y: DVector<f64>) -> Result<Self> {
        Self::relative_to(s, y, 0.0)
    }

    /// Builds a pair, rejecting steps shorter than [`eps_step`] at `z_norm`.
    pub fn relative_to(s: DVector<f64>, y: DVector<f64>, z_norm: f64) -> Result<Self> {
        if s.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: s.len(),
                found: y.len(),
            });
        }
        let norm = s.norm();
        if !(norm > eps_step(z_norm)) || !linalg::all_finite(&y) {
            return Err(Error::ZeroStep { norm });
        }
        Ok(Self { s, y })
    }

    pub fn s(&self) -> &DVector<f64> {
        &self.s
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    fn check(&self, dims: SplitDims) -> Result<()> {
        dims.check_len(self.s.len())
    }
}

/// Vectors shared by the direct and inverse J-symmetric updates.
struct Correction {
    r: DVector<f64>,
    js: DVector<f64>,
    jr: DVector<f64>,
    ss: f64,
    /// `sᵀ J r / sᵀ s`
    proj: f64,
}

impl Correction {
    fn new(b: &DMatrix<f64>, pair: &SecantPair, n: usize) -> Self {
        let r = &pair.y - b * &pair.s;
        let js = apply_j_unchecked(&pair.s, n);
        let jr = apply_j_unchecked(&r, n);
        let ss = pair.s.norm_squared();
        let proj = js.dot(&r) / ss;
        Self {
            r,
            js,
            jr,
            ss,
            proj,
        }
    }
}

/// J-symmetric least-change secant update (`β = 1`).
pub fn jsymm_update(b: &DMatrix<f64>, pair: &SecantPair, dims: SplitDims) -> Result<DMatrix<f64>> {
    jsymm_update_scaled(b, pair, 1.0, dims)
}

/// β-scaled J-symmetric update: `β` on the two rank-1 terms and `β²` on the
/// projection term. Used by the trust-region driver to keep `B⁺` nonsingular.
pub fn jsymm_update_scaled(
    b: &DMatrix<f64>,
    pair: &SecantPair,
    beta: f64,
    dims: SplitDims,
) -> Result<DMatrix<f64>> {
    dims.check_square(b)?;
    pair.check(dims)?;
    let c = Correction::new(b, pair, dims.primal());
    let mut out = b.clone();
    out.ger(beta / c.ss, &c.js, &c.jr, 1.0);
    out.ger(beta / c.ss, &c.r, &pair.s, 1.0);
    out.ger(-beta * beta * c.proj / c.ss, &c.js, &pair.s, 1.0);
    Ok(out)
}

/// Inverse of [`jsymm_update`] from `H = B⁻¹` by two Sherman-Woodbury steps.
///
/// Returns [`Error::NearSingularDenominator`] when either denominator is below
/// `EPS_DEN · sᵀs`; callers then invert `B⁺` densely.
pub fn jsymm_inverse_update(
    h: &DMatrix<f64>,
    b: &DMatrix<f64>,
    pair: &SecantPair,
    dims: SplitDims,
) -> Result<DMatrix<f64>> {
    jsymm_inverse_update_scaled(h, b, pair, 1.0, dims)
}

/// Inverse of [`jsymm_update_scaled`].
///
/// Writes `B⁺ = Q + u vᵀ / sᵀs` with `Q = B + a sᵀ / sᵀs`,
/// `a = β (r - β (sᵀJr / sᵀs) J s)`, `u = β J s` and `v = J r`, then applies
/// Sherman-Woodbury to `Q` and to `B⁺` in turn.
pub fn jsymm_inverse_update_scaled(
    h: &DMatrix<f64>,
    b: &DMatrix<f64>,
    pair: &SecantPair,
    beta: f64,
    dims: SplitDims,
) -> Result<DMatrix<f64>> {
    dims.check_square(h)?;
    dims.check_square(b)?;
    pair.check(dims)?;
    let c = Correction::new(b, pair, dims.primal());
    let floor = EPS_DEN * c.ss;

    let a = (&c.r - &c.js * (beta * c.proj)) * beta;
    let ha = h * &a;
    let sh = h.tr_mul(&pair.s);
    let den_q = c.ss + pair.s.dot(&ha);
    if !(den_q.abs() >= floor) {
        return Err(Error::NearSingularDenominator {
            context: "sherman-woodbury (projection term)",
            value: den_q,
        });
    }
    let mut q_inv = h.clone();
    q_inv.ger(-1.0 / den_q, &ha, &sh, 1.0);

    let u = &c.js * beta;
    let qu = &q_inv * &u;
    let vq = q_inv.tr_mul(&c.jr);
    let den_b = c.ss + c.jr.dot(&qu);
    if !(den_b.abs() >= floor) {
        return Err(Error::NearSingularDenominator {
            context: "sherman-woodbury (J s (J r)ᵀ term)",
            value: den_b,
        });
    }
    let mut out = q_inv;
    out.ger(-1.0 / den_b, &qu, &vq, 1.0);
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::NearSingularDenominator {
            context: "sherman-woodbury (non-finite result)",
            value: den_b,
        });
    }
    Ok(out)
}

/// Powell symmetric Broyden update; the `m = 0` case of the J-symmetric one.
pub fn psb_update(b: &DMatrix<f64>, pair: &SecantPair) -> Result<DMatrix<f64>> {
    let d = pair.s.len();
    if b.nrows() != d || b.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: b.nrows(),
        });
    }
    let r = &pair.y - b * &pair.s;
    let ss = pair.s.norm_squared();
    let sr = pair.s.dot(&r);
    let mut out = b.clone();
    out.ger(1.0 / ss, &pair.s, &r, 1.0);
    out.ger(1.0 / ss, &r, &pair.s, 1.0);
    out.ger(-sr / (ss * ss), &pair.s, &pair.s, 1.0);
    Ok(out)
}

/// Broyden's "good" rank-1 update `B + r sᵀ / sᵀs`.
pub fn broyden_update(b: &DMatrix<f64>, pair: &SecantPair) -> Result<DMatrix<f64>> {
    let d = pair.s.len();
    if b.nrows() != d || b.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: b.nrows(),
        });
    }
    let r = &pair.y - b * &pair.s;
    let mut out = b.clone();
    out.ger(1.0 / pair.s.norm_squared(), &r, &pair.s, 1.0);
    Ok(out)
}

/// Inverse form of Broyden's update, `H + (s - H y) sᵀ H / (sᵀ H y)`.
///
/// Fails with [`Error::NearSingularDenominator`] when
/// `|sᵀ H y| < EPS_DEN · ‖s‖ · ‖y‖`.
pub fn broyden_inverse_update(h: &DMatrix<f64>, pair: &SecantPair) -> Result<DMatrix<f64>> {
    let d = pair.s.len();
    if h.nrows() != d || h.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: h.nrows(),
        });
    }
    let hy = h * &pair.y;
    let den = pair.s.dot(&hy);
    if !(den.abs() >= EPS_DEN * pair.s.norm() * pair.y.norm()) || den == 0.0 {
        return Err(Error::NearSingularDenominator {
            context: "broyden inverse update",
            value: den,
        });
    }
    let sh = h.tr_mul(&pair.s);
    let mut out = h.clone();
    out.ger(1.0 / den, &(&pair.s - hy), &sh, 1.0);
    Ok(out)
}

/// How the inverse half of an update was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InverseRoute {
    ShermanWoodbury,
    DenseFallback,
}

/// Paired Jacobian estimate `B` and its inverse `H`.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobianEstimate {
    b: DMatrix<f64>,
    h: DMatrix<f64>,
    dims: SplitDims,
}

impl JacobianEstimate {
    pub fn identity(dims: SplitDims) -> Self {
        let d = dims.total();
        Self {
            b: DMatrix::identity(d, d),
            h: DMatrix::identity(d, d),
            dims,
        }
    }

    pub fn from_matrix(b: DMatrix<f64>, dims: SplitDims) -> Result<Self> {
        dims.check_square(&b)?;
        let h = linalg::invert(&b).ok_or(Error::SingularUpdate)?;
        Ok(Self { b, h, dims })
    }

    pub fn from_inverse(h: DMatrix<f64>, dims: SplitDims) -> Result<Self> {
        dims.check_square(&h)?;
        let b = linalg::invert(&h).ok_or(Error::SingularUpdate)?;
        Ok(Self { b, h, dims })
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn h(&self) -> &DMatrix<f64> {
        &self.h
    }

    pub fn dims(&self) -> SplitDims {
        self.dims
    }

    /// Max-abs entry of `J B - Bᵀ J`.
    pub fn symmetry_residual(&self) -> f64 {
        j_symmetry_residual(&self.b, self.dims).unwrap_or(f64::INFINITY)
    }

    /// Max-abs entry of `H B - I`.
    pub fn inverse_residual(&self) -> f64 {
        linalg::identity_residual(&self.h, &self.b)
    }

    /// Applies the β-scaled update and returns the new estimate without
    /// modifying `self`.
    pub fn updated(&self, pair: &SecantPair, beta: f64) -> Result<(Self, InverseRoute)> {
        let b = jsymm_update_scaled(&self.b, pair, beta, self.dims)?;
        let low_rank = jsymm_inverse_update_scaled(&self.h, &self.b, pair, beta, self.dims)
            .ok()
            .filter(|h| inverse_consistent(h, &b, pair.s()));
        let (h, route) = match low_rank {
            Some(h) => (h, InverseRoute::ShermanWoodbury),
            None => (
                linalg::invert(&b).ok_or(Error::SingularUpdate)?,
                InverseRoute::DenseFallback,
            ),
        };
        Ok((
            Self {
                b,
                h,
                dims: self.dims,
            },
            route,
        ))
    }

    /// In-place J-symmetric update (`β = 1`).
    pub fn update(&mut self, pair: &SecantPair) -> Result<InverseRoute> {
        self.update_scaled(pair, 1.0)
    }

    pub fn update_scaled(&mut self, pair: &SecantPair, beta: f64) -> Result<InverseRoute> {
        let (next, route) = self.updated(pair, beta)?;
        *self = next;
        Ok(route)
    }
}

/// O(d²) probe of `H B ≈ I` along `s` and the all-ones direction.
fn inverse_consistent(h: &DMatrix<f64>, b: &DMatrix<f64>, s: &DVector<f64>) -> bool {
    let ones = DVector::from_element(s.len(), 1.0 / (s.len() as f64).sqrt());
    [s.normalize(), ones].iter().all(|v| {
        let back = h * (b * v);
        (back - v).norm() <= TOL_INV
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dims(n: usize, m: usize) -> SplitDims {
        SplitDims::new(n, m).unwrap()
    }

    fn pair(s: &[f64], y: &[f64]) -> SecantPair {
        SecantPair::new(DVector::from_row_slice(s), DVector::from_row_slice(y)).unwrap()
    }

    fn two_by_two() -> (DMatrix<f64>, SecantPair) {
        (DMatrix::identity(2, 2), pair(&[1.0, 0.0], &[2.0, 1.0]))
    }

    #[test]
    fn zero_residual_leaves_estimate_unchanged() {
        let b = DMatrix::from_row_slice(3, 3, &[2.0, 0.5, 1.0, 0.5, 3.0, -0.2, -1.0, 0.2, 4.0]);
        let s = DVector::from_vec(vec![0.3, -1.0, 2.0]);
        let y = &b * &s;
        let p = SecantPair::new(s, y).unwrap();
        let out = jsymm_update(&b, &p, dims(2, 1)).unwrap();
        assert!((out - &b).amax() < 1e-15);
    }

    #[test]
    fn two_by_two_instance() {
        let (b, p) = two_by_two();
        let out = jsymm_update(&b, &p, dims(1, 1)).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[2.0, -1.0, 1.0, 1.0]);
        assert!((&out - expected).amax() < 1e-15);
        assert!((&out * p.s() - p.y()).amax() < 1e-15);
        assert_eq!(j_symmetry_residual(&out, dims(1, 1)).unwrap(), 0.0);
    }

    #[test]
    fn two_by_two_inverse() {
        let (b, p) = two_by_two();
        let h = jsymm_inverse_update(&DMatrix::identity(2, 2), &b, &p, dims(1, 1)).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, -1.0, 2.0]) / 3.0;
        assert!((&h - expected).amax() < 1e-15);
        let back = &h * p.y();
        assert!((back - p.s()).amax() < 1e-15);
    }

    #[test]
    fn scaled_at_half_matches_dense_formula() {
        let (b, p) = two_by_two();
        let beta = 0.5;
        let out = jsymm_update_scaled(&b, &p, beta, dims(1, 1)).unwrap();
        // dense evaluation: r = (1, 1), Js = (1, 0), Jr = (1, -1), sᵀs = 1, sᵀJr = 1
        let js = DMatrix::from_row_slice(2, 1, &[1.0, 0.0]);
        let jr = DMatrix::from_row_slice(2, 1, &[1.0, -1.0]);
        let r = DMatrix::from_row_slice(2, 1, &[1.0, 1.0]);
        let s = DMatrix::from_row_slice(2, 1, &[1.0, 0.0]);
        let expected = &b + (&js * jr.transpose() + &r * s.transpose()) * beta
            - (&js * s.transpose()) * (beta * beta);
        assert!((&out - expected).amax() < 1e-15);
        assert_eq!(j_symmetry_residual(&out, dims(1, 1)).unwrap(), 0.0);
    }

    #[test]
    fn scaled_with_zero_residual_is_identity_map() {
        let b = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, -2.0, 5.0]);
        let s = DVector::from_vec(vec![1.0, 3.0]);
        let p = SecantPair::new(s.clone(), &b * s).unwrap();
        for beta in [0.1, 0.7, 1.9] {
            let out = jsymm_update_scaled(&b, &p, beta, dims(1, 1)).unwrap();
            assert!((&out - &b).amax() < 1e-14);
        }
    }

    #[test]
    fn zero_step_is_rejected() {
        let err = SecantPair::new(DVector::zeros(2), DVector::from_vec(vec![1.0, 0.0]));
        assert!(matches!(err, Err(Error::ZeroStep { .. })));
        let tiny = DVector::from_vec(vec![1e-13, 0.0]);
        assert!(SecantPair::relative_to(tiny, DVector::zeros(2), 1e3).is_err());
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let (b, p) = two_by_two();
        assert!(matches!(
            jsymm_update(&b, &p, dims(2, 1)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn psb_zero_residual_and_secant() {
        let b = DMatrix::from_row_slice(2, 2, &[3.0, 1.0, 1.0, 2.0]);
        let s = DVector::from_vec(vec![1.0, -1.0]);
        let p = SecantPair::new(s.clone(), &b * &s).unwrap();
        assert!((psb_update(&b, &p).unwrap() - &b).amax() < 1e-15);
        let p = pair(&[1.0, -1.0], &[0.5, 4.0]);
        let out = psb_update(&b, &p).unwrap();
        assert!((&out - out.transpose()).amax() < 1e-15);
        assert!((&out * p.s() - p.y()).amax() < 1e-14);
    }

    #[test]
    fn broyden_secant_and_unchanged() {
        let b = DMatrix::from_row_slice(2, 2, &[3.0, 1.0, -1.0, 2.0]);
        let s = DVector::from_vec(vec![2.0, 1.0]);
        let p = SecantPair::new(s.clone(), &b * &s).unwrap();
        assert!((broyden_update(&b, &p).unwrap() - &b).amax() < 1e-15);
        let p = pair(&[2.0, 1.0], &[-1.0, 3.0]);
        assert!((broyden_update(&b, &p).unwrap() * p.s() - p.y()).amax() < 1e-14);
    }

    #[test]
    fn broyden_inverse_rejects_orthogonal_denominator() {
        let h = DMatrix::identity(2, 2);
        let p = pair(&[1.0, 0.0], &[0.0, 1.0]);
        assert!(matches!(
            broyden_inverse_update(&h, &p),
            Err(Error::NearSingularDenominator { .. })
        ));
    }

    #[test]
    fn estimate_falls_back_when_woodbury_breaks_down() {
        // B = I, s = e1, y = 0 makes the projection-term denominator vanish.
        let est = JacobianEstimate::identity(dims(1, 1));
        let p = pair(&[1.0, 0.0], &[0.0, 0.0]);
        let direct = jsymm_inverse_update(est.h(), est.b(), &p, dims(1, 1));
        assert!(matches!(direct, Err(Error::NearSingularDenominator { .. })));
        let result = est.updated(&p, 1.0);
        // B⁺ = [[0, 0], [0, 1]] is singular, so the dense route fails too.
        assert!(matches!(result, Err(Error::SingularUpdate)));
    }

    #[test]
    fn drifted_inverse_is_rebuilt_densely() {
        let b = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, -1.0, 3.0]);
        let mut est = JacobianEstimate::from_matrix(b, dims(1, 1)).unwrap();
        est.h[(0, 1)] += 1e-6;
        let p = pair(&[0.5, 1.0], &[1.0, 2.0]);
        let route = est.update(&p).unwrap();
        assert_eq!(route, InverseRoute::DenseFallback);
        assert!(est.inverse_residual() < 1e-12);
    }

    #[test]
    fn estimate_update_keeps_pair_consistent() {
        let mut est = JacobianEstimate::identity(dims(1, 1));
        let (_, p) = two_by_two();
        assert_eq!(est.update(&p).unwrap(), InverseRoute::ShermanWoodbury);
        assert!(est.inverse_residual() < 1e-14);
        assert_eq!(est.symmetry_residual(), 0.0);
    }
}
