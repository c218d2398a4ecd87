use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use jsymm::experiment::{
    run_experiment, run_suite, ExperimentConfig, ProblemSpec, SolverKind, SolverSettings,
    TraceFormat, EXIT_ERROR,
};

#[derive(Parser)]
#[command(name = "jsymm", version = jsymm_version(), about = "J-symmetric quasi-Newton solvers for minimax problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

fn jsymm_version() -> &'static str {
    Box::leak(jsymm::version_string().into_boxed_str())
}

#[derive(Subcommand)]
enum Command {
    /// Run one solver on one problem and write its trace.
    Run(RunArgs),
    /// Run every *.toml config in a directory and summarize.
    Suite {
        #[arg(long)]
        dir: PathBuf,
        /// Summary CSV; an aligned .txt table is written next to it.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ProblemKind {
    Quadratic,
    Bilinear,
    AnalyticCenter,
    Quartic,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverArg {
    Egm,
    Broyden,
    Jsymm,
    JsymmLs,
    JsymmTr,
}

impl From<SolverArg> for SolverKind {
    fn from(s: SolverArg) -> Self {
        match s {
            SolverArg::Egm => SolverKind::Egm,
            SolverArg::Broyden => SolverKind::Broyden,
            SolverArg::Jsymm => SolverKind::Jsymm,
            SolverArg::JsymmLs => SolverKind::JsymmLs,
            SolverArg::JsymmTr => SolverKind::JsymmTr,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_enum)]
    problem: ProblemKind,
    #[arg(long, value_enum)]
    solver: SolverArg,
    /// Diagonal scale of the random quadratic.
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Interaction coefficient of the quartic.
    #[arg(long, default_value_t = 1.0)]
    a_scalar: f64,
    /// Matrix Market file for bilinear or analytic-center.
    #[arg(long)]
    matrix: Option<PathBuf>,
    /// Matrix Market right-hand side for analytic-center (default all ones).
    #[arg(long)]
    b: Option<PathBuf>,
    /// Primal size of a random instance.
    #[arg(long)]
    n: Option<usize>,
    /// Dual size (constraint count for analytic-center) of a random instance.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, conflicts_with = "schedule")]
    stepsize: Option<f64>,
    /// Piecewise stepsize, e.g. "inf:0.01,1.0:1.0".
    #[arg(long)]
    schedule: Option<String>,
    #[arg(long)]
    c1: Option<f64>,
    #[arg(long)]
    r0: Option<f64>,
    #[arg(long)]
    delta0: Option<f64>,
    #[arg(long)]
    zeta: Option<f64>,
    #[arg(long)]
    beta_hat: Option<f64>,
    /// Stop the trust region once the merit gradient norm is below this.
    #[arg(long)]
    tol_g: Option<f64>,
    /// zero | saddle | saddle-perturbed:R | random[:R] | preset:quartic-grid:I | preset:ac-default | v1,v2,...
    #[arg(long)]
    z0: Option<String>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
    /// Allow jsymm-tr on domain-constrained problems.
    #[arg(long)]
    force_tr: bool,
}

const DEFAULT_RANDOM_SIZE: usize = 10;

impl RunArgs {
    fn into_config(self) -> ExperimentConfig {
        let problem = match self.problem {
            ProblemKind::Quadratic => ProblemSpec::Quadratic {
                n: self.n.unwrap_or(DEFAULT_RANDOM_SIZE),
                m: self.m.or(self.n).unwrap_or(DEFAULT_RANDOM_SIZE),
                alpha: self.alpha,
            },
            ProblemKind::Bilinear => ProblemSpec::Bilinear {
                n: self.n.or(Some(DEFAULT_RANDOM_SIZE)),
                m: self.m.or(self.n).or(Some(DEFAULT_RANDOM_SIZE)),
                matrix: self.matrix,
            },
            ProblemKind::AnalyticCenter => {
                let n = self.n.unwrap_or(DEFAULT_RANDOM_SIZE);
                ProblemSpec::AnalyticCenter {
                    matrix: self.matrix,
                    b: self.b,
                    n: Some(n),
                    m: Some(self.m.unwrap_or(3 * n)),
                }
            }
            ProblemKind::Quartic => ProblemSpec::Quartic { a: self.a_scalar },
        };
        let mut cfg = ExperimentConfig::new(problem, self.solver.into());
        cfg.seed = self.seed;
        cfg.z0 = self.z0;
        cfg.out = Some(self.out);
        cfg.force_tr = self.force_tr;
        cfg.format = match self.format {
            FormatArg::Csv => TraceFormat::Csv,
            FormatArg::Json => TraceFormat::Json,
        };
        cfg.settings = SolverSettings {
            tol: self.tol,
            max_iters: self.max_iters,
            stepsize: self.stepsize,
            schedule: self.schedule,
            c1: self.c1,
            r0: self.r0,
            delta0: self.delta0,
            zeta: self.zeta,
            beta_hat: self.beta_hat,
            tol_g: self.tol_g,
            strict_checks: jsymm::solvers::strict_checks_from_env(),
            record_timing: false,
        };
        cfg
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run(args) => {
            let cfg = args.into_config();
            match run_experiment(&cfg) {
                Ok(report) => {
                    let out = &report.outcome;
                    println!(
                        "{} on {}: {:?} after {} iterations, |F| = {:e}",
                        cfg.solver,
                        cfg.problem.label(),
                        out.status,
                        out.iterations(),
                        out.final_norm_f()
                    );
                    report.exit_code
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    EXIT_ERROR
                }
            }
        }
        Command::Suite { dir, out } => match run_suite(&dir, Some(&out)) {
            Ok(summary) => {
                print!("{}", summary.to_table());
                0
            }
            Err(e) => {
                eprintln!("error: {e}");
                EXIT_ERROR
            }
        },
    };
    ExitCode::from(code as u8)
}
