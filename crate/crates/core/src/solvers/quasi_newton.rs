//! Unit-step and line-search J-symmetric drivers, plus the Broyden baseline
//! that shares their loop.

use nalgebra::{DMatrix, DVector};

use super::{
    finish, start, EventKind, IterationRecord, RunContext, ScheduleCursor, SolveOutcome,
    SolveStatus, SolverConfig, Trace,
};
use crate::dims::PrimalDualPoint;
use crate::error::{Error, Result};
use crate::linalg::all_finite;
use crate::problems::MinimaxProblem;
use crate::update::{broyden_inverse_update, InverseRoute, JacobianEstimate, SecantPair, TOL_SYM};

/// Smallest backtracking step; reaching it takes the step anyway and flags
/// the record as not accepted.
pub const LINE_SEARCH_T_MIN: f64 = 1.0 / (1u64 << 30) as f64;

/// Stepsize halvings allowed to pull a fixed step back into the domain.
const MAX_DOMAIN_HALVINGS: usize = 50;

enum Estimator {
    JSymm(JacobianEstimate),
    Broyden(DMatrix<f64>),
}

impl Estimator {
    fn inverse(&self) -> &DMatrix<f64> {
        match self {
            Estimator::JSymm(est) => est.h(),
            Estimator::Broyden(h) => h,
        }
    }

    fn jacobian(&self) -> Option<&DMatrix<f64>> {
        match self {
            Estimator::JSymm(est) => Some(est.b()),
            Estimator::Broyden(_) => None,
        }
    }

    fn update(
        &mut self,
        pair: &SecantPair,
        iter: usize,
        trace: &mut Trace,
        strict: bool,
    ) -> Result<()> {
        match self {
            Estimator::JSymm(est) => match est.update(pair) {
                Ok(InverseRoute::ShermanWoodbury) => {}
                Ok(InverseRoute::DenseFallback) => {
                    trace.event(iter, EventKind::DenseInverseFallback)
                }
                Err(Error::SingularUpdate) => trace.event(
                    iter,
                    EventKind::SkippedUpdate {
                        reason: "updated estimate is singular".into(),
                    },
                ),
                Err(e) => return Err(e),
            },
            Estimator::Broyden(h) => match broyden_inverse_update(h, pair) {
                Ok(next) => *h = next,
                Err(Error::NearSingularDenominator { value, .. }) => trace.event(
                    iter,
                    EventKind::SkippedUpdate {
                        reason: format!("near-singular denominator {value:e}"),
                    },
                ),
                Err(e) => return Err(e),
            },
        }
        if strict {
            if let Estimator::JSymm(est) = self {
                check_estimate(est, pair, iter)?;
            }
        }
        Ok(())
    }
}

fn check_estimate(est: &JacobianEstimate, pair: &SecantPair, iter: usize) -> Result<()> {
    let b_norm = est.b().norm();
    let sym = est.symmetry_residual();
    if sym > TOL_SYM * (1.0 + b_norm) {
        return Err(Error::Invariant {
            iter,
            what: format!("J-symmetry residual {sym:e}"),
        });
    }
    let secant = (est.b() * pair.s() - pair.y()).norm();
    if secant > 1e-10 * (1.0 + pair.y().norm() + b_norm * pair.s().norm()) {
        return Err(Error::Invariant {
            iter,
            what: format!("secant residual {secant:e}"),
        });
    }
    Ok(())
}

#[derive(Clone, Copy)]
enum StepRule {
    Fixed,
    LineSearch { c1: f64 },
}

struct Step {
    t: f64,
    z: DVector<f64>,
    f: DVector<f64>,
    accepted: bool,
}

/// Evaluates `F` at `trial`, mapping domain violations and non-finite values
/// to `None`.
fn try_eval(problem: &dyn MinimaxProblem, trial: &DVector<f64>) -> Result<Option<DVector<f64>>> {
    if !problem.in_domain(trial) {
        return Ok(None);
    }
    match problem.eval_f(trial) {
        Ok(f) if all_finite(&f) || !problem.is_domain_constrained() => Ok(Some(f)),
        Ok(_) | Err(Error::Domain) => Ok(None),
        Err(e) => Err(e),
    }
}

pub(super) fn fixed_step(
    problem: &dyn MinimaxProblem,
    z: &DVector<f64>,
    dir: &DVector<f64>,
    t0: f64,
    iter: usize,
    trace: &mut Trace,
) -> Result<(f64, DVector<f64>, DVector<f64>)> {
    let mut t = t0;
    for halvings in 0..=MAX_DOMAIN_HALVINGS {
        let trial = z + dir * t;
        if let Some(f) = try_eval(problem, &trial)? {
            if halvings > 0 {
                trace.event(iter, EventKind::DomainBacktrack { halvings });
            }
            return Ok((t, trial, f));
        }
        t *= 0.5;
    }
    Err(Error::Domain)
}

fn backtrack(
    problem: &dyn MinimaxProblem,
    z: &DVector<f64>,
    f_norm: f64,
    dir: &DVector<f64>,
    c1: f64,
    iter: usize,
    trace: &mut Trace,
) -> Result<Step> {
    let mut t = 1.0f64;
    if let Some(bound) = problem.step_to_boundary(z, dir) {
        t = t.min(0.99 * bound);
    }
    while t >= LINE_SEARCH_T_MIN {
        let trial = z + dir * t;
        if let Some(f) = try_eval(problem, &trial)? {
            if f_norm - f.norm() >= c1 * f_norm {
                return Ok(Step {
                    t,
                    z: trial,
                    f,
                    accepted: true,
                });
            }
        }
        t *= 0.5;
    }
    trace.event(iter, EventKind::LineSearchUnderflow);
    let t = LINE_SEARCH_T_MIN;
    let trial = z + dir * t;
    let f = try_eval(problem, &trial)?.ok_or(Error::Domain)?;
    Ok(Step {
        t,
        z: trial,
        f,
        accepted: false,
    })
}

fn run(
    problem: &dyn MinimaxProblem,
    z0: &PrimalDualPoint,
    mut est: Estimator,
    cfg: &SolverConfig,
    rule: StepRule,
) -> Result<SolveOutcome> {
    cfg.validate()?;
    let ctx = RunContext::new(problem, cfg.record_timing);
    let (mut z, mut f) = start(problem, z0)?;
    let mut trace = Trace::default();
    let mut cursor = ScheduleCursor::new(&cfg.schedule);
    let first_t = match rule {
        StepRule::Fixed => cfg.schedule.initial(),
        StepRule::LineSearch { .. } => 1.0,
    };
    trace.push(
        &z,
        cfg.record_iterates,
        ctx.initial_record(f.norm(), first_t),
    );

    let mut iter = 0;
    while f.norm() > cfg.tol_f && iter < cfg.max_iters {
        iter += 1;
        let f_norm = f.norm();
        let dir = -(est.inverse() * &f);
        if !all_finite(&dir) {
            return Err(Error::Diverged { iter });
        }
        let step = match rule {
            StepRule::Fixed => {
                let t0 = cursor.stepsize(f_norm);
                let (t, z_new, f_new) = fixed_step(problem, &z, &dir, t0, iter, &mut trace)?;
                Step {
                    t,
                    z: z_new,
                    f: f_new,
                    accepted: true,
                }
            }
            StepRule::LineSearch { c1 } => {
                backtrack(problem, &z, f_norm, &dir, c1, iter, &mut trace)?
            }
        };

        let s = &step.z - &z;
        let dm_ratio = est.jacobian().and_then(|b| ctx.dm_ratio(b, &s));
        let y = &step.f - &f;
        let step_norm = s.norm();
        match SecantPair::relative_to(s, y, z.norm()) {
            Ok(pair) => est.update(&pair, iter, &mut trace, cfg.strict_checks)?,
            Err(_) => trace.event(
                iter,
                EventKind::SkippedUpdate {
                    reason: "step below eps_step".into(),
                },
            ),
        }
        z = step.z;
        f = step.f;
        trace.push(
            &z,
            cfg.record_iterates,
            IterationRecord {
                iter,
                norm_f: f.norm(),
                step_norm,
                stepsize_or_delta: step.t,
                rho: None,
                accepted: step.accepted,
                dm_ratio,
                wall_ns: ctx.wall_ns(),
            },
        );
        if !f.norm().is_finite() {
            return Err(Error::Diverged { iter });
        }
    }
    let status = if f.norm() <= cfg.tol_f {
        SolveStatus::Converged
    } else {
        SolveStatus::MaxIterations
    };
    Ok(finish(problem, z, trace, status))
}

/// Fixed-stepsize J-symmetric quasi-Newton: `z⁺ = z - t H F(z)` followed by
/// the J-symmetric update of `(B, H)`. A schedule of `t = 1` is the pure
/// unit-step method.
pub fn solve_jsymm(
    problem: &dyn MinimaxProblem,
    z0: &PrimalDualPoint,
    h0: &DMatrix<f64>,
    cfg: &SolverConfig,
) -> Result<SolveOutcome> {
    let est = JacobianEstimate::from_inverse(h0.clone(), problem.dims())?;
    run(problem, z0, Estimator::JSymm(est), cfg, StepRule::Fixed)
}

/// J-symmetric quasi-Newton with backtracking: start from `t = 1` (capped at
/// 99% of the distance to the domain boundary) and halve until
/// `‖F(z)‖ - ‖F(z + t s)‖ >= c₁ ‖F(z)‖`.
pub fn solve_jsymm_ls(
    problem: &dyn MinimaxProblem,
    z0: &PrimalDualPoint,
    h0: &DMatrix<f64>,
    cfg: &SolverConfig,
) -> Result<SolveOutcome> {
    let est = JacobianEstimate::from_inverse(h0.clone(), problem.dims())?;
    run(
        problem,
        z0,
        Estimator::JSymm(est),
        cfg,
        StepRule::LineSearch { c1: cfg.c1 },
    )
}

/// Broyden's good method in inverse form with a fixed stepsize. Updates with
/// a near-singular denominator are skipped and logged.
pub fn solve_broyden(
    problem: &dyn MinimaxProblem,
    z0: &PrimalDualPoint,
    h0: &DMatrix<f64>,
    cfg: &SolverConfig,
) -> Result<SolveOutcome> {
    problem.dims().check_square(h0)?;
    run(
        problem,
        z0,
        Estimator::Broyden(h0.clone()),
        cfg,
        StepRule::Fixed,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{
        bilinear_problem, generate_random_quadratic, quadratic_problem, quartic_problem,
    };

    #[test]
    fn start_at_saddle_takes_no_iterations() {
        let p = bilinear_problem(DMatrix::from_element(2, 2, 1.0)).unwrap();
        let z0 = p.known_saddle().unwrap();
        let out = solve_jsymm(&p, &z0, &DMatrix::identity(4, 4), &SolverConfig::default()).unwrap();
        assert_eq!(out.iterations(), 0);
        assert_eq!(out.status, SolveStatus::Converged);
        assert_eq!(out.trace.records.len(), 1);
    }

    #[test]
    fn exact_inverse_on_affine_field_is_one_step() {
        let p = quadratic_problem(generate_random_quadratic(3, 3, 1.0, 5)).unwrap();
        let z0 = PrimalDualPoint::from_slice(&[1.0, -1.0, 0.5, 0.2, 0.0, 2.0], p.dims()).unwrap();
        let jac = p.eval_jacobian(z0.values()).unwrap();
        let h0 = jac.try_inverse().unwrap();
        let cfg = SolverConfig {
            tol_f: 1e-10,
            ..Default::default()
        };
        let out = solve_jsymm(&p, &z0, &h0, &cfg).unwrap();
        assert_eq!(out.iterations(), 1);
        let out = solve_broyden(&p, &z0, &h0, &cfg).unwrap();
        assert_eq!(out.iterations(), 1);
    }

    #[test]
    fn first_fixed_step_on_scalar_bilinear() {
        let p = bilinear_problem(DMatrix::from_element(1, 1, 1.0)).unwrap();
        let z0 = PrimalDualPoint::from_slice(&[1.0, 0.0], p.dims()).unwrap();
        let cfg = SolverConfig {
            max_iters: 1,
            schedule: super::super::StepSchedule::constant(0.1),
            ..Default::default()
        };
        let out = solve_jsymm(&p, &z0, &DMatrix::identity(2, 2), &cfg).unwrap();
        assert_eq!(out.z.values().as_slice(), &[1.0, 0.1]);
    }

    #[test]
    fn line_search_accepts_full_newton_step() {
        let p = quadratic_problem(generate_random_quadratic(2, 2, 1.0, 9)).unwrap();
        let z0 = PrimalDualPoint::from_slice(&[1.0, 1.0, 1.0, 1.0], p.dims()).unwrap();
        let h0 = p.eval_jacobian(z0.values()).unwrap().try_inverse().unwrap();
        let out = solve_jsymm_ls(&p, &z0, &h0, &SolverConfig::default()).unwrap();
        assert_eq!(out.trace.records[1].stepsize_or_delta, 1.0);
        assert!(out.trace.records[1].accepted);
    }

    #[test]
    fn line_search_halves_without_decrease() {
        // H0 = -0.01 I points uphill for the merit function at (3, 0.5)
        let p = quartic_problem(0.0);
        let z0 = PrimalDualPoint::from_slice(&[3.0, 0.5], p.dims()).unwrap();
        let cfg = SolverConfig {
            max_iters: 1,
            c1: 0.25,
            ..Default::default()
        };
        let out = solve_jsymm_ls(&p, &z0, &(DMatrix::identity(2, 2) * -0.01), &cfg).unwrap();
        assert!(out.trace.records[1].stepsize_or_delta < 1.0);
    }

    #[test]
    fn near_singular_broyden_update_is_skipped() {
        // sᵀHy = 0 on the first step: H = I, F(z) = (0, -1) gives s = (0, 1),
        // y = F(z + s) - F(z) = (1, 0).
        let p = bilinear_problem(DMatrix::from_element(1, 1, 1.0)).unwrap();
        let z0 = PrimalDualPoint::from_slice(&[1.0, 0.0], p.dims()).unwrap();
        let cfg = SolverConfig {
            max_iters: 1,
            ..Default::default()
        };
        let out = solve_broyden(&p, &z0, &DMatrix::identity(2, 2), &cfg).unwrap();
        assert!(matches!(
            out.trace.events[0].kind,
            EventKind::SkippedUpdate { .. }
        ));
    }
}
