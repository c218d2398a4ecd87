//! Iterative drivers. Every solver returns a [`SolveOutcome`] whose trace has
//! one record for the starting point plus one per iteration.

mod egm;
mod quasi_newton;
mod trust_region;

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dims::PrimalDualPoint;
use crate::error::{Error, Result};
use crate::problems::MinimaxProblem;

pub use egm::solve_egm;
pub use quasi_newton::{solve_broyden, solve_jsymm, solve_jsymm_ls, LINE_SEARCH_T_MIN};
pub use trust_region::{cauchy_point, dogleg_point, quasi_newton_point, solve_jsymm_tr};

/// Environment variable that switches on per-iteration invariant checks.
pub const CHECKS_ENV: &str = "JSYMM_CHECKS";

/// `true` when `JSYMM_CHECKS=strict`.
pub fn strict_checks_from_env() -> bool {
    std::env::var(CHECKS_ENV)
        .map(|v| v == "strict")
        .unwrap_or(false)
}

/// Piecewise-constant stepsize keyed on `‖F(z)‖`.
///
/// Stage `k` applies once `‖F‖ < threshold_k`; thresholds decrease strictly
/// and stages are never revisited once entered.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepSchedule {
    stages: Vec<(f64, f64)>,
}

impl StepSchedule {
    pub fn constant(stepsize: f64) -> Self {
        Self {
            stages: vec![(f64::INFINITY, stepsize)],
        }
    }

    pub fn new(stages: Vec<(f64, f64)>) -> Result<Self> {
        let bad = |message: String| Error::Config {
            path: "schedule".into(),
            message,
        };
        if stages.is_empty() {
            return Err(bad("schedule has no stages".into()));
        }
        for (i, &(threshold, step)) in stages.iter().enumerate() {
            if !(step > 0.0 && step.is_finite()) {
                return Err(bad(format!("stage {i}: stepsize {step} must be positive")));
            }
            if threshold.is_nan() || (i > 0 && threshold >= stages[i - 1].0) {
                return Err(bad(format!("stage {i}: thresholds must decrease strictly")));
            }
        }
        Ok(Self { stages })
    }

    /// Parses `"inf:0.01,1.0:1.0"`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut stages = Vec::new();
        for (i, part) in text.split(',').enumerate() {
            let (th, st) = part.split_once(':').ok_or_else(|| Error::Config {
                path: format!("schedule[{i}]"),
                message: format!("expected `threshold:stepsize`, got `{part}`"),
            })?;
            let num = |tok: &str| -> Result<f64> {
                tok.trim().parse::<f64>().map_err(|_| Error::Config {
                    path: format!("schedule[{i}]"),
                    message: format!("invalid number `{tok}`"),
                })
            };
            stages.push((num(th)?, num(st)?));
        }
        Self::new(stages)
    }

    pub fn stages(&self) -> &[(f64, f64)] {
        &self.stages
    }

    /// The stepsize used on the very first iteration.
    pub fn initial(&self) -> f64 {
        self.stages[0].1
    }
}

impl std::fmt::Display for StepSchedule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self
            .stages
            .iter()
            .map(|(t, s)| format!("{t}:{s}"))
            .collect();
        f.write_str(&parts.join(","))
    }
}

/// Stateful view of a schedule for one run.
#[derive(Debug, Clone)]
pub(crate) struct ScheduleCursor<'a> {
    schedule: &'a StepSchedule,
    stage: usize,
}

impl<'a> ScheduleCursor<'a> {
    pub(crate) fn new(schedule: &'a StepSchedule) -> Self {
        Self { schedule, stage: 0 }
    }

    pub(crate) fn stepsize(&mut self, norm_f: f64) -> f64 {
        let stages = &self.schedule.stages;
        while self.stage + 1 < stages.len() && norm_f < stages[self.stage + 1].0 {
            self.stage += 1;
        }
        stages[self.stage].1
    }
}

/// Settings shared by the unit-step, line-search, Broyden and EGM drivers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub tol_f: f64,
    pub max_iters: usize,
    pub schedule: StepSchedule,
    /// Sufficient-decrease parameter of the backtracking line search.
    pub c1: f64,
    pub seed: u64,
    pub strict_checks: bool,
    /// Fill `wall_ns`; off by default so traces are reproducible.
    pub record_timing: bool,
    /// Keep every iterate in [`Trace::iterates`].
    #[serde(default)]
    pub record_iterates: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol_f: 1e-4,
            max_iters: 2000,
            schedule: StepSchedule::constant(1.0),
            c1: 1e-4,
            seed: 0,
            strict_checks: false,
            record_timing: false,
            record_iterates: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |path: &str, message: String| Error::Config {
            path: path.into(),
            message,
        };
        if !(self.tol_f > 0.0) {
            return Err(bad("tol_f", format!("{} must be positive", self.tol_f)));
        }
        if !(self.c1 > 0.0 && self.c1 < 0.5) {
            return Err(bad("c1", format!("{} must lie in (0, 1/2)", self.c1)));
        }
        Ok(())
    }
}

/// Settings for the trust-region driver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrustRegionConfig {
    /// Largest admissible radius.
    pub r0: f64,
    pub delta0: f64,
    /// `β` is drawn from `[1 - beta_hat, 1 + beta_hat]`.
    pub beta_hat: f64,
    /// Acceptance threshold on the ratio `ρ`.
    pub zeta: f64,
    pub seed: u64,
    pub tol_f: f64,
    /// Stop once `‖∇F(z)ᵀF(z)‖ <= tol_g`; zero disables the test.
    pub tol_g: f64,
    pub max_iters: usize,
    /// Redraws of `β` before giving up on a nonsingular update.
    pub max_resamples: usize,
    pub strict_checks: bool,
    pub record_timing: bool,
    #[serde(default)]
    pub record_iterates: bool,
}

impl Default for TrustRegionConfig {
    fn default() -> Self {
        Self {
            r0: 1.0,
            delta0: 1.0,
            beta_hat: 0.9,
            zeta: 1e-4,
            seed: 0,
            tol_f: 1e-4,
            tol_g: 0.0,
            max_iters: 2000,
            max_resamples: 20,
            strict_checks: false,
            record_timing: false,
            record_iterates: false,
        }
    }
}

impl TrustRegionConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |path: &str, message: String| Error::Config {
            path: path.into(),
            message,
        };
        if !(self.delta0 > 0.0 && self.delta0 <= self.r0) {
            return Err(bad(
                "delta0",
                format!("need 0 < delta0 <= r0, got {} and {}", self.delta0, self.r0),
            ));
        }
        if !(self.beta_hat > 0.0 && self.beta_hat < 1.0) {
            return Err(bad(
                "beta_hat",
                format!("{} must lie in (0, 1)", self.beta_hat),
            ));
        }
        if !(self.zeta > 0.0 && self.zeta < 1e-3) {
            return Err(bad("zeta", format!("{} must lie in (0, 1e-3)", self.zeta)));
        }
        if !(self.tol_f > 0.0) {
            return Err(bad("tol_f", format!("{} must be positive", self.tol_f)));
        }
        if !(self.tol_g >= 0.0) {
            return Err(bad("tol_g", format!("{} must be nonnegative", self.tol_g)));
        }
        Ok(())
    }
}

/// One row of a trace. Row 0 describes the starting point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub norm_f: f64,
    pub step_norm: f64,
    pub stepsize_or_delta: f64,
    pub rho: Option<f64>,
    pub accepted: bool,
    pub dm_ratio: Option<f64>,
    pub wall_ns: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EventKind {
    /// The Sherman-Woodbury inverse was replaced by a dense inverse.
    DenseInverseFallback,
    SkippedUpdate {
        reason: String,
    },
    /// Backtracking hit the minimum step; the step was taken anyway.
    LineSearchUnderflow,
    /// The trial point left the domain and was treated as a rejection.
    DomainRejection,
    /// Stepsize halvings needed to stay inside the domain.
    DomainBacktrack {
        halvings: usize,
    },
    BetaResampled {
        draws: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub iter: usize,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub records: Vec<IterationRecord>,
    pub events: Vec<TraceEvent>,
    /// Iterate after each record, when requested by the config.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub iterates: Vec<Vec<f64>>,
}

impl Trace {
    fn push(&mut self, z: &DVector<f64>, keep_iterate: bool, record: IterationRecord) {
        if keep_iterate {
            self.iterates.push(z.as_slice().to_vec());
        }
        self.records.push(record);
    }

    fn event(&mut self, iter: usize, kind: EventKind) {
        log::debug!("iteration {iter}: {kind:?}");
        self.events.push(TraceEvent { iter, kind });
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    /// `‖F(z)‖ <= tol_f`.
    Converged,
    /// The merit gradient vanished before `F` did (trust region only).
    Stationary,
    MaxIterations,
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub z: PrimalDualPoint,
    pub trace: Trace,
    pub status: SolveStatus,
}

impl SolveOutcome {
    pub fn iterations(&self) -> usize {
        self.trace.records.len().saturating_sub(1)
    }

    pub fn final_norm_f(&self) -> f64 {
        self.trace.records.last().map_or(f64::NAN, |r| r.norm_f)
    }
}

/// Bookkeeping shared by all drivers: timing and the Dennis-Moré reference
/// Jacobian when the problem advertises its saddle point.
pub(crate) struct RunContext {
    start: Instant,
    record_timing: bool,
    jac_star: Option<DMatrix<f64>>,
}

impl RunContext {
    pub(crate) fn new(problem: &dyn MinimaxProblem, record_timing: bool) -> Self {
        let jac_star = problem
            .known_saddle()
            .and_then(|z| problem.eval_jacobian(z.values()).ok());
        Self {
            start: Instant::now(),
            record_timing,
            jac_star,
        }
    }

    pub(crate) fn wall_ns(&self) -> u64 {
        if self.record_timing {
            self.start.elapsed().as_nanos() as u64
        } else {
            0
        }
    }

    pub(crate) fn dm_ratio(&self, b: &DMatrix<f64>, s: &DVector<f64>) -> Option<f64> {
        let jac = self.jac_star.as_ref()?;
        crate::verify::dennis_more_ratio(b, jac, s).ok()
    }

    pub(crate) fn initial_record(&self, norm_f: f64, stepsize_or_delta: f64) -> IterationRecord {
        IterationRecord {
            iter: 0,
            norm_f,
            step_norm: 0.0,
            stepsize_or_delta,
            rho: None,
            accepted: true,
            dm_ratio: None,
            wall_ns: self.wall_ns(),
        }
    }
}

/// Validates the starting point and evaluates `F` there.
pub(crate) fn start(
    problem: &dyn MinimaxProblem,
    z0: &PrimalDualPoint,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let dims = problem.dims();
    if z0.dims() != dims {
        return Err(Error::DimensionMismatch {
            expected: dims.total(),
            found: z0.values().len(),
        });
    }
    let z = z0.values().clone();
    if !problem.in_domain(&z) {
        return Err(Error::Domain);
    }
    let f = problem.eval_f(&z)?;
    Ok((z, f))
}

pub(crate) fn finish(
    problem: &dyn MinimaxProblem,
    z: DVector<f64>,
    trace: Trace,
    status: SolveStatus,
) -> SolveOutcome {
    SolveOutcome {
        z: PrimalDualPoint::new(z, problem.dims()).expect("iterate keeps its length"),
        trace,
        status,
    }
}
