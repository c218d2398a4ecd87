use super::{
    finish, start, EventKind, IterationRecord, RunContext, ScheduleCursor, SolveOutcome,
    SolveStatus, SolverConfig, Trace,
};
use crate::dims::PrimalDualPoint;
use crate::error::{Error, Result};
use crate::linalg::all_finite;
use crate::problems::MinimaxProblem;

const MAX_DOMAIN_HALVINGS: usize = 50;

/// Extragradient method: `z' = z - t F(z)`, `z⁺ = z - t F(z')`.
///
/// If either point leaves the domain the stepsize is halved for that
/// iteration.
pub fn solve_egm(
    problem: &dyn MinimaxProblem,
    z0: &PrimalDualPoint,
    cfg: &SolverConfig,
) -> Result<SolveOutcome> {
    cfg.validate()?;
    let ctx = RunContext::new(problem, cfg.record_timing);
    let (mut z, mut f) = start(problem, z0)?;
    let mut trace = Trace::default();
    let mut cursor = ScheduleCursor::new(&cfg.schedule);
    trace.push(
        &z,
        cfg.record_iterates,
        ctx.initial_record(f.norm(), cfg.schedule.initial()),
    );

    let mut iter = 0;
    while f.norm() > cfg.tol_f && iter < cfg.max_iters {
        iter += 1;
        let mut t = cursor.stepsize(f.norm());
        let mut next = None;
        for halvings in 0..=MAX_DOMAIN_HALVINGS {
            let mid = &z - &f * t;
            if problem.in_domain(&mid) {
                let f_mid = problem.eval_f(&mid)?;
                let z_new = &z - f_mid * t;
                if problem.in_domain(&z_new) {
                    if halvings > 0 {
                        trace.event(iter, EventKind::DomainBacktrack { halvings });
                    }
                    next = Some(z_new);
                    break;
                }
            }
            t *= 0.5;
        }
        let z_new = next.ok_or(Error::Domain)?;
        let f_new = problem.eval_f(&z_new)?;
        let step_norm = (&z_new - &z).norm();
        z = z_new;
        f = f_new;
        trace.push(
            &z,
            cfg.record_iterates,
            IterationRecord {
                iter,
                norm_f: f.norm(),
                step_norm,
                stepsize_or_delta: t,
                rho: None,
                accepted: true,
                dm_ratio: None,
                wall_ns: ctx.wall_ns(),
            },
        );
        if !all_finite(&f) {
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
