//! Trust-region J-symmetric quasi-Newton on the merit function `½‖F(z)‖²`.
//!
//! The model is `m(s) = ½‖F‖² + gᵀs + ½ sᵀBᵀBs` with `g = ∇F(z)ᵀF(z)`. The
//! step is the model minimizer when it fits in the region, otherwise the
//! Cauchy point if that lies on the boundary, otherwise the dogleg point.
//! `B` is updated after every iteration, null steps included, with a random
//! scaling `β ∈ [1 - β̂, 1 + β̂]` redrawn until `B⁺` is nonsingular.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::{
    finish, start, EventKind, IterationRecord, RunContext, SolveOutcome, SolveStatus, Trace,
    TrustRegionConfig,
};
use crate::dims::{j_symmetry_residual, PrimalDualPoint};
use crate::error::{Error, Result};
use crate::linalg::{self, all_finite};
use crate::problems::MinimaxProblem;
use crate::rng::{self, streams};
use crate::update::{JacobianEstimate, SecantPair, TOL_SYM};
use crate::verify::sufficient_decrease_check;

/// Estimates with reciprocal condition below this are redrawn.
const MIN_RCOND: f64 = 1e-12;

/// Global minimizer of the model, `-H Hᵀ g`.
pub fn quasi_newton_point(est: &JacobianEstimate, g: &DVector<f64>) -> Result<DVector<f64>> {
    est.dims().check_len(g.len())?;
    let p = -(est.h() * est.h().tr_mul(g));
    if !all_finite(&p) {
        return Err(Error::SingularUpdate);
    }
    Ok(p)
}

/// Returns the Cauchy point and whether it sits on the region boundary.
fn cauchy(est: &JacobianEstimate, g: &DVector<f64>, delta: f64) -> (DVector<f64>, bool) {
    let g_norm = g.norm();
    if g_norm == 0.0 {
        return (DVector::zeros(g.len()), false);
    }
    let curvature = (est.b() * g).norm_squared();
    let to_boundary = delta / g_norm;
    let interior = g_norm * g_norm / curvature;
    if curvature > 0.0 && interior < to_boundary {
        (g * -interior, false)
    } else {
        (g * -to_boundary, true)
    }
}

/// Minimizer of the model along `-g` within radius `delta`:
/// `-min{‖g‖²/(gᵀBᵀBg), Δ/‖g‖} g`.
pub fn cauchy_point(est: &JacobianEstimate, g: &DVector<f64>, delta: f64) -> Result<DVector<f64>> {
    est.dims().check_len(g.len())?;
    if !(delta > 0.0) {
        return Err(Error::Contract(format!(
            "trust-region radius {delta} must be positive"
        )));
    }
    Ok(cauchy(est, g, delta).0)
}

/// Point `p_c + α (p_b - p_c)` with norm exactly `delta`, `α ∈ (0, 1)`.
/// Requires `‖p_c‖ < delta < ‖p_b‖`.
pub fn dogleg_point(p_c: &DVector<f64>, p_b: &DVector<f64>, delta: f64) -> Result<DVector<f64>> {
    if p_c.len() != p_b.len() {
        return Err(Error::DimensionMismatch {
            expected: p_c.len(),
            found: p_b.len(),
        });
    }
    let (nc, nb) = (p_c.norm(), p_b.norm());
    if !(nc < delta && delta < nb) {
        return Err(Error::Contract(format!(
            "dogleg needs |p_c| < delta < |p_b|, got {nc} < {delta} < {nb}"
        )));
    }
    let d = p_b - p_c;
    // ‖p_c + α d‖² = Δ²  ⇔  a α² + b α + c = 0 with c < 0
    let a = d.norm_squared();
    let b = 2.0 * p_c.dot(&d);
    let c = nc * nc - delta * delta;
    let disc = (b * b - 4.0 * a * c).sqrt();
    let alpha = if b > 0.0 {
        -2.0 * c / (b + disc)
    } else {
        (disc - b) / (2.0 * a)
    };
    Ok(p_c + d * alpha)
}

fn model_decrease(g: &DVector<f64>, b: &DMatrix<f64>, s: &DVector<f64>) -> f64 {
    -(g.dot(s) + 0.5 * (b * s).norm_squared())
}

struct Candidate {
    est: JacobianEstimate,
    draws: usize,
}

fn resampled_update<R: Rng>(
    est: &JacobianEstimate,
    pair: &SecantPair,
    cfg: &TrustRegionConfig,
    rng: &mut R,
) -> Result<Candidate> {
    for draw in 1..=cfg.max_resamples.max(1) {
        let beta = rng.random_range(1.0 - cfg.beta_hat..=1.0 + cfg.beta_hat);
        if let Ok((next, _)) = est.updated(pair, beta) {
            if linalg::rcond(next.b(), next.h()) >= MIN_RCOND {
                return Ok(Candidate {
                    est: next,
                    draws: draw,
                });
            }
        }
    }
    Err(Error::SingularUpdate)
}

/// Trust-region J-symmetric quasi-Newton.
///
/// Trial points outside the domain count as `ρ = -∞`; the radius is halved
/// and the `B` update is skipped for that iteration.
pub fn solve_jsymm_tr(
    problem: &dyn MinimaxProblem,
    z0: &PrimalDualPoint,
    b0: &DMatrix<f64>,
    cfg: &TrustRegionConfig,
) -> Result<SolveOutcome> {
    cfg.validate()?;
    let dims = problem.dims();
    if j_symmetry_residual(b0, dims)? > TOL_SYM * (1.0 + b0.norm()) {
        return Err(Error::Contract(
            "initial estimate is not J-symmetric".into(),
        ));
    }
    let mut est = JacobianEstimate::from_matrix(b0.clone(), dims)?;
    let ctx = RunContext::new(problem, cfg.record_timing);
    let (mut z, mut f) = start(problem, z0)?;
    let mut rng = rng::stream(cfg.seed, streams::BETA);
    let mut trace = Trace::default();
    let mut delta = cfg.delta0;
    trace.push(&z, cfg.record_iterates, ctx.initial_record(f.norm(), delta));

    let mut g = problem.eval_jacobian(&z)?.tr_mul(&f);
    let mut status = SolveStatus::MaxIterations;
    let mut iter = 0;
    loop {
        if f.norm() <= cfg.tol_f {
            status = SolveStatus::Converged;
            break;
        }
        if g.norm() <= cfg.tol_g || g.norm() == 0.0 {
            status = SolveStatus::Stationary;
            break;
        }
        if iter >= cfg.max_iters {
            break;
        }
        iter += 1;

        let p_b = quasi_newton_point(&est, &g)?;
        let s = if p_b.norm() <= delta {
            p_b
        } else {
            let (p_c, on_boundary) = cauchy(&est, &g, delta);
            if on_boundary {
                p_c
            } else {
                dogleg_point(&p_c, &p_b, delta)?
            }
        };
        let step_norm = s.norm();
        let predicted = model_decrease(&g, est.b(), &s);
        if !(predicted > 0.0) {
            // only possible when g vanishes to rounding
            status = SolveStatus::Stationary;
            break;
        }

        if cfg.strict_checks {
            check_iteration(&est, &f, &g, &s, predicted, delta, iter)?;
        }

        let trial = &z + &s;
        let f_trial = if problem.in_domain(&trial) {
            match problem.eval_f(&trial) {
                Ok(v) if all_finite(&v) => Some(v),
                Ok(_) | Err(Error::Domain) => None,
                Err(e) => return Err(e),
            }
        } else {
            None
        };
        let rho = match &f_trial {
            Some(ft) => 0.5 * (f.norm_squared() - ft.norm_squared()) / predicted,
            None => {
                trace.event(iter, EventKind::DomainRejection);
                f64::NEG_INFINITY
            }
        };
        let delta_used = delta;
        delta = if rho <= 0.5 {
            delta / 2.0
        } else {
            (2.0 * delta).min(cfg.r0)
        };

        let dm_ratio = ctx.dm_ratio(est.b(), &s);
        let accepted = rho >= cfg.zeta;

        if let Some(ft) = &f_trial {
            let y = ft - &f;
            match SecantPair::relative_to(s.clone(), y, z.norm()) {
                Ok(pair) => {
                    let cand = resampled_update(&est, &pair, cfg, &mut rng)?;
                    if cand.draws > 1 {
                        trace.event(iter, EventKind::BetaResampled { draws: cand.draws });
                    }
                    est = cand.est;
                }
                Err(_) => trace.event(
                    iter,
                    EventKind::SkippedUpdate {
                        reason: "step below eps_step".into(),
                    },
                ),
            }
        } else {
            trace.event(
                iter,
                EventKind::SkippedUpdate {
                    reason: "trial point outside the domain".into(),
                },
            );
        }

        if accepted {
            let prev = f.norm();
            z = trial;
            f = f_trial.expect("accepted steps have a finite trial value");
            if cfg.strict_checks && f.norm() > prev {
                return Err(Error::Invariant {
                    iter,
                    what: format!("merit increased from {prev:e} to {:e}", f.norm()),
                });
            }
            g = problem.eval_jacobian(&z)?.tr_mul(&f);
        }

        trace.push(
            &z,
            cfg.record_iterates,
            IterationRecord {
                iter,
                norm_f: f.norm(),
                step_norm,
                stepsize_or_delta: delta_used,
                rho: Some(rho),
                accepted,
                dm_ratio,
                wall_ns: ctx.wall_ns(),
            },
        );
    }
    Ok(finish(problem, z, trace, status))
}

/// Per-iteration invariants checked under `JSYMM_CHECKS=strict`.
fn check_iteration(
    est: &JacobianEstimate,
    f: &DVector<f64>,
    g: &DVector<f64>,
    s: &DVector<f64>,
    predicted: f64,
    delta: f64,
    iter: usize,
) -> Result<()> {
    let m0 = 0.5 * f.norm_squared();
    let report = sufficient_decrease_check(
        m0,
        m0 - predicted,
        g.norm(),
        delta,
        linalg::spectral_norm(est.b()),
    );
    if !report.passed {
        return Err(Error::Invariant {
            iter,
            what: format!("sufficient decrease short by {:e}", report.max_abs_error),
        });
    }
    if s.norm() > delta * (1.0 + 1e-12) {
        return Err(Error::Invariant {
            iter,
            what: format!("step {:e} outside radius {delta:e}", s.norm()),
        });
    }
    let sym = est.symmetry_residual();
    if sym > TOL_SYM * (1.0 + est.b().norm()) {
        return Err(Error::Invariant {
            iter,
            what: format!("J-symmetry residual {sym:e}"),
        });
    }
    Ok(())
}
