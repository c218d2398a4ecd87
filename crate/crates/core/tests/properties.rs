mod common;

use common::j_symmetrize;
use jsymm::linalg::{identity_residual, invert, spectral_norm};
use jsymm::update::{
    broyden_inverse_update, broyden_update, jsymm_update, jsymm_update_scaled, psb_update,
    JacobianEstimate,
};
use jsymm::verify::kkt_least_change_oracle;
use jsymm::{j_symmetry_residual, SecantPair, SplitDims};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

#[derive(Debug, Clone)]
struct Case {
    dims: SplitDims,
    b: DMatrix<f64>,
    s: DVector<f64>,
    y: DVector<f64>,
}

impl Case {
    fn pair(&self) -> SecantPair {
        SecantPair::new(self.s.clone(), self.y.clone()).unwrap()
    }
}

fn case(max_block: usize) -> impl Strategy<Value = Case> {
    (0..=max_block, 0..=max_block)
        .prop_filter("nonempty", |(n, m)| n + m > 0)
        .prop_flat_map(|(n, m)| {
            let d = n + m;
            (
                Just((n, m)),
                prop::collection::vec(-2.0..2.0f64, d * d),
                prop::collection::vec(-1.0..1.0f64, d),
                prop::collection::vec(-2.0..2.0f64, d),
            )
        })
        .prop_filter("step not tiny", |(_, _, s, _)| {
            s.iter().map(|v| v * v).sum::<f64>() > 1e-2
        })
        .prop_map(|((n, m), b, s, y)| {
            let dims = SplitDims::new(n, m).unwrap();
            let d = n + m;
            Case {
                dims,
                b: j_symmetrize(&DMatrix::from_row_slice(d, d, &b), dims),
                s: DVector::from_vec(s),
                y: DVector::from_vec(y),
            }
        })
}

fn square(
    d: std::ops::RangeInclusive<usize>,
) -> impl Strategy<Value = (DMatrix<f64>, DVector<f64>, DVector<f64>)> {
    d.prop_flat_map(|d| {
        (
            prop::collection::vec(-1.0..1.0f64, d * d),
            prop::collection::vec(-1.0..1.0f64, d),
            prop::collection::vec(-1.0..1.0f64, d),
        )
            .prop_map(move |(b, s, y)| {
                (
                    DMatrix::from_row_slice(d, d, &b),
                    DVector::from_vec(s),
                    DVector::from_vec(y),
                )
            })
    })
    .prop_filter("step not tiny", |(_, s, _)| s.norm() > 0.1)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn secant_and_j_symmetry_hold(c in case(4)) {
        let bp = jsymm_update(&c.b, &c.pair(), c.dims).unwrap();
        let secant = (&bp * &c.s - &c.y).norm();
        prop_assert!(secant <= 1e-10 * (1.0 + c.y.norm()), "secant residual {secant:e}");
        let sym = j_symmetry_residual(&bp, c.dims).unwrap();
        prop_assert!(sym <= 1e-10 * (1.0 + bp.norm()), "symmetry residual {sym:e}");
    }

    #[test]
    fn closed_form_is_the_least_change_solution(c in case(4)) {
        let pair = c.pair();
        let closed = jsymm_update(&c.b, &pair, c.dims).unwrap();
        let oracle = kkt_least_change_oracle(&c.b, &pair, c.dims).unwrap();
        let gap = (&closed - &oracle).norm();
        prop_assert!(gap <= 1e-8 * (1.0 + c.b.norm()), "gap {gap:e}");
    }

    #[test]
    fn zero_residual_leaves_b_unchanged(c in case(4)) {
        let y = &c.b * &c.s;
        let pair = SecantPair::new(c.s.clone(), y).unwrap();
        let bp = jsymm_update(&c.b, &pair, c.dims).unwrap();
        prop_assert!((&bp - &c.b).amax() <= 1e-12 * (1.0 + c.b.amax()));
    }

    #[test]
    fn psb_is_the_pure_primal_case((b, s, y) in square(1..=6)) {
        let b = (&b + b.transpose()) * 0.5;
        let dims = SplitDims::new(b.nrows(), 0).unwrap();
        let pair = SecantPair::new(s, y).unwrap();
        let a = jsymm_update(&b, &pair, dims).unwrap();
        let p = psb_update(&b, &pair).unwrap();
        prop_assert!((&a - &p).amax() <= 1e-12);
    }

    #[test]
    fn scaled_update_is_continuous_in_beta(c in case(4), beta in 0.1..1.9f64) {
        let pair = c.pair();
        let one = jsymm_update(&c.b, &pair, c.dims).unwrap();
        let at_one = jsymm_update_scaled(&c.b, &pair, 1.0, c.dims).unwrap();
        prop_assert!((&one - &at_one).amax() <= 1e-12 * (1.0 + one.amax()));
        // Quadratic in β: second differences are constant.
        let h = 1e-3;
        let f = |b: f64| jsymm_update_scaled(&c.b, &pair, b, c.dims).unwrap();
        let second = (f(beta + h) - f(beta) * 2.0 + f(beta - h)) - (f(1.0 + h) - f(1.0) * 2.0 + f(1.0 - h));
        prop_assert!(second.amax() <= 1e-9 * (1.0 + one.amax()));
    }

    #[test]
    fn scaled_update_keeps_j_symmetry(c in case(4), beta in 0.1..1.9f64) {
        let bp = jsymm_update_scaled(&c.b, &c.pair(), beta, c.dims).unwrap();
        prop_assert!(j_symmetry_residual(&bp, c.dims).unwrap() <= 1e-10 * (1.0 + bp.norm()));
    }

    #[test]
    fn inverse_stays_consistent(c in case(4), beta in 0.1..1.9f64) {
        let d = c.dims.total();
        let b = DMatrix::identity(d, d) * 3.0 + &c.b * 0.3;
        let Some(h) = invert(&b) else { return Ok(()); };
        let est = JacobianEstimate::from_inverse(h, c.dims).unwrap();
        let Ok((next, _route)) = est.updated(&c.pair(), beta) else { return Ok(()); };
        let bp = next.b();
        let Some(bp_inv) = invert(bp) else { return Ok(()); };
        let cond = spectral_norm(bp) * spectral_norm(&bp_inv);
        if cond < 1e6 {
            let res = identity_residual(next.h(), bp);
            prop_assert!(res <= 1e-8, "H⁺B⁺ - I = {res:e} at cond {cond:e}");
        }
    }

    #[test]
    fn broyden_pair_is_consistent((b, s, y) in square(2..=4)) {
        let d = b.nrows();
        let b = DMatrix::identity(d, d) * 2.0 + b * 0.3;
        let pair = SecantPair::new(s.clone(), y.clone()).unwrap();
        let bp = broyden_update(&b, &pair).unwrap();
        prop_assert!((&bp * &s - &y).norm() <= 1e-12 * (1.0 + y.norm()));
        let h = invert(&b).unwrap();
        if let Ok(hp) = broyden_inverse_update(&h, &pair) {
            if let Some(inv) = invert(&bp) {
                if spectral_norm(&bp) * spectral_norm(&inv) < 1e6 {
                    prop_assert!(identity_residual(&hp, &bp) <= 1e-8);
                }
            }
        }
    }
}
