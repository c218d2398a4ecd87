//! Config-driven runs: build a problem and a starting point from an
//! [`ExperimentConfig`], run one solver and persist its trace.

mod start;
mod suite;
mod trace;

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use crate::dims::PrimalDualPoint;
use crate::error::{Error, Result};
use crate::problems::{
    analytic_center_problem, bilinear_problem, generate_random_bilinear, generate_random_polytope,
    generate_random_quadratic, load_matrix_market, quadratic_problem, quartic_problem,
    MinimaxProblem,
};
use crate::rng::{self, streams};
use crate::solvers::{
    self, SolveOutcome, SolveStatus, SolverConfig, StepSchedule, TrustRegionConfig,
};

pub use start::{StartSpec, QUARTIC_GRID};
pub use suite::{run_suite, SuiteRow, SuiteSummary};
pub use trace::{write_trace, TraceFormat, TraceHeader};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    Egm,
    Broyden,
    Jsymm,
    JsymmLs,
    JsymmTr,
}

impl SolverKind {
    pub const ALL: [SolverKind; 5] = [
        SolverKind::Egm,
        SolverKind::Broyden,
        SolverKind::Jsymm,
        SolverKind::JsymmLs,
        SolverKind::JsymmTr,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SolverKind::Egm => "egm",
            SolverKind::Broyden => "broyden",
            SolverKind::Jsymm => "jsymm",
            SolverKind::JsymmLs => "jsymm-ls",
            SolverKind::JsymmTr => "jsymm-tr",
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Config {
                path: "solver".into(),
                message: format!("unknown solver `{s}`"),
            })
    }
}

/// Which problem to build. Random instances are drawn from the run seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProblemSpec {
    Quadratic {
        n: usize,
        m: usize,
        #[serde(default = "one")]
        alpha: f64,
    },
    /// `matrix` is an `m × n` Matrix Market file; otherwise a random
    /// Gaussian matrix of that shape.
    Bilinear {
        #[serde(default)]
        matrix: Option<PathBuf>,
        #[serde(default)]
        n: Option<usize>,
        #[serde(default)]
        m: Option<usize>,
    },
    /// Constraints `Ax <= b` with `A` of size `m × n`. Without `matrix` a
    /// random bounded polytope is generated; without `b` the right-hand
    /// side is all ones.
    AnalyticCenter {
        #[serde(default)]
        matrix: Option<PathBuf>,
        #[serde(default)]
        b: Option<PathBuf>,
        #[serde(default)]
        n: Option<usize>,
        #[serde(default)]
        m: Option<usize>,
    },
    Quartic {
        #[serde(default = "one")]
        a: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl ProblemSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            ProblemSpec::Quadratic { .. } => "quadratic",
            ProblemSpec::Bilinear { .. } => "bilinear",
            ProblemSpec::AnalyticCenter { .. } => "analytic-center",
            ProblemSpec::Quartic { .. } => "quartic",
        }
    }

    /// Short human label, e.g. `quartic(a=10)`.
    pub fn label(&self) -> String {
        match self {
            ProblemSpec::Quadratic { n, m, alpha } => {
                format!("quadratic(n={n},m={m},alpha={alpha})")
            }
            ProblemSpec::Bilinear {
                matrix: Some(p), ..
            } => format!("bilinear({})", file_stem(p)),
            ProblemSpec::Bilinear { n, m, .. } => {
                format!("bilinear(n={},m={})", n.unwrap_or(0), m.unwrap_or(0))
            }
            ProblemSpec::AnalyticCenter {
                matrix: Some(p), ..
            } => {
                format!("analytic-center({})", file_stem(p))
            }
            ProblemSpec::AnalyticCenter { n, m, .. } => {
                format!("analytic-center(n={},m={})", n.unwrap_or(0), m.unwrap_or(0))
            }
            ProblemSpec::Quartic { a } => format!("quartic(a={a})"),
        }
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(path) = p {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
            }
        };
        match self {
            ProblemSpec::Bilinear { matrix, .. } => fix(matrix),
            ProblemSpec::AnalyticCenter { matrix, b, .. } => {
                fix(matrix);
                fix(b);
            }
            _ => {}
        }
    }

    /// Builds the oracle. `seed` drives random instances.
    pub fn build(&self, seed: u64) -> Result<Box<dyn MinimaxProblem>> {
        let missing = |field: &str| Error::Config {
            path: format!("problem.{field}"),
            message: "required when no matrix file is given".into(),
        };
        Ok(match self {
            ProblemSpec::Quadratic { n, m, alpha } => Box::new(quadratic_problem(
                generate_random_quadratic(*n, *m, *alpha, seed),
            )?),
            ProblemSpec::Bilinear { matrix, n, m } => {
                let a = match matrix {
                    Some(path) => load_matrix_market(path)?,
                    None => {
                        let n = n.ok_or_else(|| missing("n"))?;
                        let m = m.ok_or_else(|| missing("m"))?;
                        generate_random_bilinear(m, n, seed)
                    }
                };
                Box::new(bilinear_problem(a)?)
            }
            ProblemSpec::AnalyticCenter { matrix, b, n, m } => {
                let (a, rhs) = match matrix {
                    Some(path) => {
                        let a = load_matrix_market(path)?;
                        let rhs = match b {
                            Some(bp) => column(load_matrix_market(bp)?, "problem.b")?,
                            None => DVector::from_element(a.nrows(), 1.0),
                        };
                        (a, rhs)
                    }
                    None => {
                        let n = n.ok_or_else(|| missing("n"))?;
                        let m = m.ok_or_else(|| missing("m"))?;
                        generate_random_polytope(n, m, seed)?
                    }
                };
                Box::new(analytic_center_problem(a, rhs)?)
            }
            ProblemSpec::Quartic { a } => Box::new(quartic_problem(*a)),
        })
    }
}

fn file_stem(p: &Path) -> String {
    p.file_stem().map_or_else(
        || p.display().to_string(),
        |s| s.to_string_lossy().into_owned(),
    )
}

fn column(mat: DMatrix<f64>, path: &str) -> Result<DVector<f64>> {
    let (r, c) = mat.shape();
    if c == 1 {
        Ok(mat.column(0).into_owned())
    } else if r == 1 {
        Ok(mat.row(0).transpose())
    } else {
        Err(Error::Config {
            path: path.into(),
            message: format!("expected a vector, got a {r}x{c} matrix"),
        })
    }
}

/// Solver knobs. Absent fields take the library defaults; settings that do
/// not apply to the chosen solver are ignored.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSettings {
    pub tol: Option<f64>,
    pub max_iters: Option<usize>,
    pub stepsize: Option<f64>,
    /// `"inf:0.01,1.0:1.0"`; exclusive with `stepsize`.
    pub schedule: Option<String>,
    pub c1: Option<f64>,
    pub r0: Option<f64>,
    pub delta0: Option<f64>,
    pub zeta: Option<f64>,
    pub beta_hat: Option<f64>,
    pub tol_g: Option<f64>,
    pub strict_checks: bool,
    pub record_timing: bool,
}

impl SolverSettings {
    pub fn schedule(&self) -> Result<StepSchedule> {
        match (self.stepsize, &self.schedule) {
            (Some(_), Some(_)) => Err(Error::Config {
                path: "settings.schedule".into(),
                message: "`stepsize` and `schedule` are exclusive".into(),
            }),
            (Some(t), None) => StepSchedule::new(vec![(f64::INFINITY, t)]),
            (None, Some(text)) => StepSchedule::parse(text),
            (None, None) => Ok(StepSchedule::constant(1.0)),
        }
    }

    pub fn solver_config(&self, seed: u64) -> Result<SolverConfig> {
        let d = SolverConfig::default();
        let cfg = SolverConfig {
            tol_f: self.tol.unwrap_or(d.tol_f),
            max_iters: self.max_iters.unwrap_or(d.max_iters),
            schedule: self.schedule()?,
            c1: self.c1.unwrap_or(d.c1),
            seed,
            strict_checks: self.strict_checks || solvers::strict_checks_from_env(),
            record_timing: self.record_timing,
            record_iterates: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn trust_region_config(&self, seed: u64) -> Result<TrustRegionConfig> {
        let d = TrustRegionConfig::default();
        let cfg = TrustRegionConfig {
            r0: self.r0.unwrap_or(d.r0),
            delta0: self.delta0.unwrap_or(d.delta0),
            beta_hat: self.beta_hat.unwrap_or(d.beta_hat),
            zeta: self.zeta.unwrap_or(d.zeta),
            seed,
            tol_f: self.tol.unwrap_or(d.tol_f),
            tol_g: self.tol_g.unwrap_or(d.tol_g),
            max_iters: self.max_iters.unwrap_or(d.max_iters),
            max_resamples: d.max_resamples,
            strict_checks: self.strict_checks || solvers::strict_checks_from_env(),
            record_timing: self.record_timing,
            record_iterates: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// A single run, as read from TOML or assembled by the command line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub problem: ProblemSpec,
    pub solver: SolverKind,
    #[serde(default)]
    pub seed: u64,
    /// Starting point, see [`StartSpec`]. Defaults to the problem's natural
    /// start (the origin, or the interior point for analytic center).
    #[serde(default)]
    pub z0: Option<String>,
    #[serde(default)]
    pub settings: SolverSettings,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub format: TraceFormat,
    /// Allow the trust-region solver on domain-constrained problems.
    #[serde(default)]
    pub force_tr: bool,
    /// Stepsizes tried by `run_suite`; the best converging one is reported.
    #[serde(default)]
    pub sweep: Vec<f64>,
}

impl ExperimentConfig {
    pub fn new(problem: ProblemSpec, solver: SolverKind) -> Self {
        Self {
            name: None,
            problem,
            solver,
            seed: 0,
            z0: None,
            settings: SolverSettings::default(),
            out: None,
            format: TraceFormat::Csv,
            force_tr: false,
            sweep: Vec::new(),
        }
    }

    pub fn from_toml_str(text: &str, origin: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config {
            path: origin.into(),
            message: e.to_string().trim_end().to_string(),
        })
    }

    /// Reads a TOML file; relative paths inside it resolve against its
    /// directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::from_toml_str(&text, &path.display().to_string())?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        cfg.problem.resolve_paths(base);
        if let Some(out) = &mut cfg.out {
            if out.is_relative() {
                *out = base.join(&*out);
            }
        }
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

/// Process exit code for an outcome: 0 converged, 2 stopped short.
pub fn exit_code(status: SolveStatus) -> i32 {
    match status {
        SolveStatus::Converged => 0,
        SolveStatus::Stationary | SolveStatus::MaxIterations => 2,
    }
}

/// Exit code for errors.
pub const EXIT_ERROR: i32 = 1;

/// Result of [`run_experiment`].
#[derive(Debug, Clone)]
pub struct RunReport {
    pub outcome: SolveOutcome,
    pub exit_code: i32,
    pub trace_path: Option<PathBuf>,
}

/// Builds the problem and start, then runs the configured solver.
pub fn solve(cfg: &ExperimentConfig) -> Result<SolveOutcome> {
    let problem = cfg.problem.build(cfg.seed)?;
    solve_on(cfg, problem.as_ref())
}

pub(crate) fn solve_on(
    cfg: &ExperimentConfig,
    problem: &dyn MinimaxProblem,
) -> Result<SolveOutcome> {
    let spec: StartSpec = match &cfg.z0 {
        Some(text) => text.parse()?,
        None => StartSpec::Default,
    };
    let z0 = spec.resolve(problem, cfg.seed)?;
    run_solver(
        problem,
        cfg.solver,
        &z0,
        &cfg.settings,
        cfg.seed,
        cfg.force_tr,
    )
}

/// Diagonal starting inverse for Broyden's method with entries from `U(0, 1)`.
pub fn broyden_initial_inverse(size: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = rng::stream(seed, streams::BROYDEN_H0);
    let uniform = Uniform::new(0.0, 1.0).expect("valid range");
    let diag = DVector::from_fn(size, |_, _| uniform.sample(&mut rng));
    DMatrix::from_diagonal(&diag)
}

/// Runs `kind` from `z0`. The J-symmetric solvers start from the identity,
/// Broyden from [`broyden_initial_inverse`].
pub fn run_solver(
    problem: &dyn MinimaxProblem,
    kind: SolverKind,
    z0: &PrimalDualPoint,
    settings: &SolverSettings,
    seed: u64,
    force_tr: bool,
) -> Result<SolveOutcome> {
    let total = problem.dims().total();
    let identity = DMatrix::identity(total, total);
    match kind {
        SolverKind::Egm => solvers::solve_egm(problem, z0, &settings.solver_config(seed)?),
        SolverKind::Broyden => solvers::solve_broyden(
            problem,
            z0,
            &broyden_initial_inverse(total, seed),
            &settings.solver_config(seed)?,
        ),
        SolverKind::Jsymm => {
            solvers::solve_jsymm(problem, z0, &identity, &settings.solver_config(seed)?)
        }
        SolverKind::JsymmLs => {
            solvers::solve_jsymm_ls(problem, z0, &identity, &settings.solver_config(seed)?)
        }
        SolverKind::JsymmTr => {
            if problem.is_domain_constrained() && !force_tr {
                return Err(Error::Config {
                    path: "solver".into(),
                    message: format!(
                        "jsymm-tr is disabled on the domain-constrained {} problem (set force_tr or pass --force-tr)",
                        problem.name()
                    ),
                });
            }
            solvers::solve_jsymm_tr(problem, z0, &identity, &settings.trust_region_config(seed)?)
        }
    }
}

/// Runs one configuration and writes its trace to `cfg.out` when set.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunReport> {
    let outcome = solve(cfg)?;
    let trace_path = match &cfg.out {
        Some(path) => {
            let header = TraceHeader::new(cfg, outcome.status);
            let file = std::fs::File::create(path)?;
            let mut writer = std::io::BufWriter::new(file);
            write_trace(&mut writer, &header, &outcome.trace, cfg.format)?;
            std::io::Write::flush(&mut writer)?;
            Some(path.clone())
        }
        None => None,
    };
    log::info!(
        "{} on {}: {:?} after {} iterations, |F| = {:e}",
        cfg.solver,
        cfg.problem.label(),
        outcome.status,
        outcome.iterations(),
        outcome.final_norm_f()
    );
    Ok(RunReport {
        exit_code: exit_code(outcome.status),
        outcome,
        trace_path,
    })
}
