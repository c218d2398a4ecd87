mod common;

use std::io::Cursor;

use jsymm::problems::{
    analytic_center_problem, bilinear_problem, generate_random_bilinear, generate_random_polytope,
    generate_random_quadratic, quadratic_problem, quartic_problem, read_matrix_market,
    write_matrix_market, MinimaxProblem,
};
use jsymm::verify::{
    check_jacobian, dennis_more_ratio, dennis_more_ratio_compensated, finite_difference_jacobian,
    kkt_least_change_oracle, sufficient_decrease_check,
};
use jsymm::{j_symmetry_residual, PrimalDualPoint, SecantPair, SplitDims};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sample_points(problem: &dyn MinimaxProblem, seed: u64, count: usize) -> Vec<PrimalDualPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dims = problem.dims();
    let mut out = Vec::new();
    while out.len() < count {
        let z = DVector::from_fn(dims.total(), |_, _| rng.random_range(-2.0..2.0));
        if problem.in_domain(&z) {
            out.push(PrimalDualPoint::new(z, dims).unwrap());
        }
    }
    out
}

fn assert_jacobian_ok(problem: &dyn MinimaxProblem, points: &[PrimalDualPoint]) {
    for z in points {
        let report = check_jacobian(problem, z, 1e-5).unwrap();
        assert!(report.passed, "{}: {report:?}", problem.name());
        let jac = problem.eval_jacobian(z.values()).unwrap();
        let sym = j_symmetry_residual(&jac, problem.dims()).unwrap();
        assert!(
            sym <= 1e-12 * (1.0 + jac.amax()),
            "{} Jacobian not J-symmetric",
            problem.name()
        );
    }
}

#[test]
fn jacobians_match_finite_differences_on_every_problem() {
    let quad = quadratic_problem(generate_random_quadratic(4, 3, 1.0, 11)).unwrap();
    assert_jacobian_ok(&quad, &sample_points(&quad, 1, 10));

    let bil = bilinear_problem(generate_random_bilinear(3, 5, 12)).unwrap();
    assert_jacobian_ok(&bil, &sample_points(&bil, 2, 10));

    for a in [1.0, 10.0, 100.0, 1000.0] {
        let q = quartic_problem(a);
        assert_jacobian_ok(&q, &sample_points(&q, 3, 10));
    }

    let (a, b) = generate_random_polytope(3, 6, 13).unwrap();
    let ac = analytic_center_problem(a, b).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let base = ac.default_start().into_values();
    let pts: Vec<_> = (0..10)
        .map(|_| {
            let jitter = DVector::from_fn(base.len(), |_, _| rng.random_range(-0.2..0.2));
            let mut z = &base + jitter;
            // keep y strictly positive
            for i in 3..9 {
                z[i] = z[i].abs() + 0.1;
            }
            PrimalDualPoint::new(z, ac.dims()).unwrap()
        })
        .collect();
    assert_jacobian_ok(&ac, &pts);
}

#[test]
fn quartic_symbolic_jacobian_at_one_one() {
    let q = quartic_problem(1.0);
    let z = PrimalDualPoint::from_slice(&[1.0, 1.0], q.dims()).unwrap();
    let fd = finite_difference_jacobian(&q, &z, 1e-4).unwrap();
    let expected = DMatrix::from_row_slice(2, 2, &[-8.0, 1.0, -1.0, -8.0]);
    assert!((fd - expected).amax() < 1e-5);
}

#[test]
fn affine_fields_are_differentiated_exactly() {
    let bil = bilinear_problem(generate_random_bilinear(4, 4, 5)).unwrap();
    let z = &sample_points(&bil, 9, 1)[0];
    for h in [1e-1, 1.0, 10.0] {
        let fd = finite_difference_jacobian(&bil, z, h).unwrap();
        let exact = bil.eval_jacobian(z.values()).unwrap();
        assert!((fd - exact).amax() < 1e-12 * (1.0 + h));
    }
}

#[test]
fn finite_difference_error_is_second_order() {
    let q = quartic_problem(10.0);
    let z = PrimalDualPoint::from_slice(&[0.7, -1.3], q.dims()).unwrap();
    let exact = q.eval_jacobian(z.values()).unwrap();
    let hs: Vec<f64> = (0..6).map(|k| 0.1 / 2f64.powi(k)).collect();
    let pts: Vec<(f64, f64)> = hs
        .iter()
        .map(|&h| {
            let err = (finite_difference_jacobian(&q, &z, h).unwrap() - &exact).amax();
            (h.ln(), err.ln())
        })
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    assert!((slope - 2.0).abs() <= 0.3, "slope {slope}");
}

#[test]
fn dennis_more_ratio_properties() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..50 {
        let b = common::uniform_matrix(&mut rng, 5, 5);
        let j = common::uniform_matrix(&mut rng, 5, 5);
        let s = common::uniform_vector(&mut rng, 5);
        let base = dennis_more_ratio(&b, &j, &s).unwrap();
        for c in [-3.0, 1e-6, 7.5e4] {
            let scaled = dennis_more_ratio(&b, &j, &(&s * c)).unwrap();
            assert!((scaled - base).abs() <= 1e-13 * (1.0 + base));
        }
        let comp = dennis_more_ratio_compensated(&b, &j, &s);
        assert!((comp - base).abs() <= 1e-14 * (1.0 + base));
    }
    let b = DMatrix::<f64>::identity(3, 3);
    assert_eq!(
        dennis_more_ratio(&b, &b, &DVector::from_element(3, 1.0)).unwrap(),
        0.0
    );
    let z = DMatrix::zeros(3, 3);
    let unit = DVector::from_vec(vec![0.6, 0.0, 0.8]);
    assert!((dennis_more_ratio(&b, &z, &unit).unwrap() - 1.0).abs() < 1e-15);
    assert!(dennis_more_ratio(&b, &z, &DVector::zeros(3)).is_err());
}

#[test]
fn sufficient_decrease_examples() {
    assert!(sufficient_decrease_check(1.0, 1.0, 0.0, 1.0, 1.0).passed);
    // Cauchy step on B = I, g = e₁, Δ = 2 decreases the model by exactly ½.
    let m = |s: f64| 0.5 + s + 0.5 * s * s;
    assert!(sufficient_decrease_check(m(0.0), m(-1.0), 1.0, 2.0, 1.0).passed);
    assert!(!sufficient_decrease_check(2.0, 2.0, 1.0, 1.0, 1.0).passed);
}

#[test]
fn kkt_oracle_reference_instances() {
    let dims = SplitDims::new(1, 1).unwrap();
    let pair = SecantPair::new(
        DVector::from_vec(vec![1.0, 0.0]),
        DVector::from_vec(vec![2.0, 1.0]),
    )
    .unwrap();
    let b = kkt_least_change_oracle(&DMatrix::identity(2, 2), &pair, dims).unwrap();
    let expected = DMatrix::from_row_slice(2, 2, &[2.0, -1.0, 1.0, 1.0]);
    assert!((b - expected).amax() < 1e-12);

    // B s = y already: B is its own closest feasible point.
    let inst = common::random_instance(77, 3);
    let y = &inst.b * inst.pair.s();
    let pair = SecantPair::new(inst.pair.s().clone(), y).unwrap();
    let same = kkt_least_change_oracle(&inst.b, &pair, inst.dims).unwrap();
    assert!((same - &inst.b).amax() < 1e-10);

    // m = 0 against the PSB closed form.
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let m = common::uniform_matrix(&mut rng, 3, 3);
    let b = (&m + m.transpose()) * 0.5;
    let s = common::uniform_vector(&mut rng, 3);
    let y = common::uniform_vector(&mut rng, 3);
    let pair = SecantPair::new(s.clone(), y.clone()).unwrap();
    let dims = SplitDims::new(3, 0).unwrap();
    let r = &y - &b * &s;
    let ss = s.dot(&s);
    let psb = &b + (&r * s.transpose() + &s * r.transpose()) / ss
        - &s * s.transpose() * (s.dot(&r) / (ss * ss));
    let oracle = kkt_least_change_oracle(&b, &pair, dims).unwrap();
    assert!((oracle - psb).amax() < 1e-9);
}

#[test]
fn matrix_market_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut a = common::uniform_matrix(&mut rng, 4, 6);
    a[(1, 2)] = 0.0;
    a[(3, 5)] = 1e-300;
    let mut buf = Vec::new();
    write_matrix_market(&mut buf, &a).unwrap();
    let back = read_matrix_market(Cursor::new(buf)).unwrap();
    assert_eq!(back, a);

    let sym = "%%MatrixMarket matrix coordinate real symmetric\n% comment\n3 3 3\n1 1 2.0\n2 1 -1\n3 3 4\n";
    let m = read_matrix_market(Cursor::new(sym)).unwrap();
    assert_eq!(m[(0, 1)], -1.0);
    assert_eq!(m[(1, 0)], -1.0);

    let bad = "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n";
    let err = read_matrix_market(Cursor::new(bad))
        .unwrap_err()
        .to_string();
    assert!(err.contains("line 3"), "{err}");
    let complex = "%%MatrixMarket matrix coordinate complex general\n1 1 1\n1 1 1 0\n";
    assert!(read_matrix_market(Cursor::new(complex)).is_err());
}
