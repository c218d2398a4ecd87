use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::{solve, trace, ExperimentConfig, TraceHeader};
use crate::error::Result;
use crate::solvers::{SolveOutcome, SolveStatus};

/// One line of the summary table.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteRow {
    pub config: String,
    pub problem: String,
    pub solver: String,
    /// Iterations to reach the tolerance; `None` prints as `-`.
    pub iterations: Option<usize>,
    pub final_norm_f: Option<f64>,
    /// Stepsize picked by a sweep.
    pub stepsize: Option<f64>,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SuiteSummary {
    pub rows: Vec<SuiteRow>,
}

const COLUMNS: [&str; 7] = [
    "config",
    "problem",
    "solver",
    "iterations",
    "final_norm_f",
    "stepsize",
    "reason",
];

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl SuiteRow {
    fn cells(&self) -> [String; 7] {
        [
            self.config.clone(),
            self.problem.clone(),
            self.solver.clone(),
            self.iterations
                .map_or_else(|| "-".into(), |k| k.to_string()),
            self.final_norm_f
                .map_or_else(|| "-".into(), |x| format!("{x:.3e}")),
            self.stepsize.map_or_else(String::new, |t| t.to_string()),
            self.reason.clone(),
        ]
    }
}

impl SuiteSummary {
    pub fn to_csv(&self) -> String {
        let mut out = COLUMNS.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.cells().iter().map(|c| csv_field(c)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    /// Space-aligned rendering of the same table.
    pub fn to_table(&self) -> String {
        let rows: Vec<[String; 7]> = self.rows.iter().map(SuiteRow::cells).collect();
        let mut widths = COLUMNS.map(str::len);
        for cells in &rows {
            for (w, c) in widths.iter_mut().zip(cells) {
                *w = (*w).max(c.chars().count());
            }
        }
        let mut out = String::new();
        let mut line = |cells: &[String]| {
            let parts: Vec<String> = cells
                .iter()
                .zip(widths)
                .map(|(c, w)| format!("{c:<w$}"))
                .collect();
            let _ = writeln!(out, "{}", parts.join("  ").trim_end());
        };
        line(&COLUMNS.map(String::from));
        for cells in &rows {
            line(cells);
        }
        out
    }
}

fn config_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "toml"))
        .collect();
    files.sort();
    Ok(files)
}

fn one_line(message: &str) -> String {
    message.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn status_reason(status: SolveStatus) -> &'static str {
    match status {
        SolveStatus::Converged => "",
        SolveStatus::Stationary => "stationary point of the merit function",
        SolveStatus::MaxIterations => "iteration limit reached",
    }
}

/// Runs every stepsize of the sweep and keeps the converging run with the
/// fewest iterations, or the lowest final `‖F‖` when none converges.
fn best_of_sweep(cfg: &ExperimentConfig) -> (Result<SolveOutcome>, Option<f64>) {
    if cfg.sweep.is_empty() {
        return (solve(cfg), None);
    }
    let mut best: Option<(SolveOutcome, f64)> = None;
    let mut last_err = None;
    for &t in &cfg.sweep {
        let mut trial = cfg.clone();
        trial.settings.stepsize = Some(t);
        trial.settings.schedule = None;
        match solve(&trial) {
            Ok(out) => {
                let better = match &best {
                    None => true,
                    Some((b, _)) => match (out.status, b.status) {
                        (SolveStatus::Converged, SolveStatus::Converged) => {
                            out.iterations() < b.iterations()
                        }
                        (SolveStatus::Converged, _) => true,
                        (_, SolveStatus::Converged) => false,
                        _ => out.final_norm_f() < b.final_norm_f(),
                    },
                };
                if better {
                    best = Some((out, t));
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    match best {
        Some((out, t)) => (Ok(out), Some(t)),
        None => (Err(last_err.expect("sweep is non-empty")), None),
    }
}

fn run_one(path: &Path) -> SuiteRow {
    let config = path
        .file_stem()
        .map_or_else(String::new, |s| s.to_string_lossy().into_owned());
    let cfg = match ExperimentConfig::load(path) {
        Ok(cfg) => cfg,
        Err(e) => {
            return SuiteRow {
                config,
                problem: "?".into(),
                solver: "?".into(),
                iterations: None,
                final_norm_f: None,
                stepsize: None,
                reason: one_line(&e.to_string()),
            }
        }
    };
    let config = cfg.name.clone().unwrap_or(config);
    let (result, stepsize) = best_of_sweep(&cfg);
    let mut row = SuiteRow {
        config,
        problem: cfg.problem.label(),
        solver: cfg.solver.to_string(),
        iterations: None,
        final_norm_f: None,
        stepsize,
        reason: String::new(),
    };
    match result {
        Ok(out) => {
            if let Some(dest) = &cfg.out {
                let header = TraceHeader::new(&cfg, out.status);
                let written = std::fs::File::create(dest)
                    .map_err(Into::into)
                    .and_then(|f| {
                        let mut w = std::io::BufWriter::new(f);
                        trace::write_trace(&mut w, &header, &out.trace, cfg.format)
                    });
                if let Err(e) = written {
                    row.reason = one_line(&format!("trace not written: {e}"));
                }
            }
            if out.status == SolveStatus::Converged {
                row.iterations = Some(out.iterations());
            } else if row.reason.is_empty() {
                row.reason = status_reason(out.status).into();
            }
            row.final_norm_f = Some(out.final_norm_f());
        }
        Err(e) => row.reason = one_line(&e.to_string()),
    }
    row
}

/// Runs every `*.toml` config in `dir` (in file-name order, in parallel) and
/// writes the summary as CSV to `out` and as an aligned table next to it
/// with a `.txt` extension.
pub fn run_suite(dir: impl AsRef<Path>, out: Option<&Path>) -> Result<SuiteSummary> {
    let files = config_files(dir.as_ref())?;
    let rows: Vec<SuiteRow> = files.par_iter().map(|p| run_one(p)).collect();
    let summary = SuiteSummary { rows };
    if let Some(out) = out {
        std::fs::write(out, summary.to_csv())?;
        std::fs::write(out.with_extension("txt"), summary.to_table())?;
    }
    Ok(summary)
}
