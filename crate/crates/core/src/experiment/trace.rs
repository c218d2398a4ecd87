use std::io::Write;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::ExperimentConfig;
use crate::error::{Error, Result};
use crate::solvers::{IterationRecord, SolveStatus, Trace};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceFormat {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for TraceFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(TraceFormat::Csv),
            "json" => Ok(TraceFormat::Json),
            _ => Err(Error::Config {
                path: "format".into(),
                message: format!("unknown trace format `{s}`"),
            }),
        }
    }
}

pub const CSV_COLUMNS: &str =
    "iter,norm_f,step_norm,stepsize_or_delta,rho,accepted,dm_ratio,wall_ns";

/// Metadata written ahead of the rows. Only `timestamp` varies between
/// otherwise identical runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub version: String,
    pub seed: u64,
    pub solver: String,
    pub problem: String,
    pub status: SolveStatus,
    pub config: serde_json::Value,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
}

impl TraceHeader {
    pub fn new(cfg: &ExperimentConfig, status: SolveStatus) -> Self {
        Self {
            version: crate::version_string(),
            seed: cfg.seed,
            solver: cfg.solver.to_string(),
            problem: cfg.problem.label(),
            status,
            config: serde_json::to_value(cfg).expect("config serializes"),
            timestamp: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
        }
    }
}

fn real(x: f64) -> String {
    format!("{x:e}")
}

fn csv_row(r: &IterationRecord) -> String {
    format!(
        "{},{},{},{},{},{},{},{}",
        r.iter,
        real(r.norm_f),
        real(r.step_norm),
        real(r.stepsize_or_delta),
        r.rho.map(real).unwrap_or_default(),
        r.accepted,
        r.dm_ratio.map(real).unwrap_or_default(),
        r.wall_ns
    )
}

#[derive(Serialize)]
struct JsonTrace<'a> {
    header: &'a TraceHeader,
    records: &'a [IterationRecord],
    events: &'a [crate::solvers::TraceEvent],
}

/// Writes the header and one row per record. CSV headers are `# key: value`
/// comment lines followed by the column line; events become `# event:`
/// lines.
pub fn write_trace<W: Write>(
    out: &mut W,
    header: &TraceHeader,
    trace: &Trace,
    format: TraceFormat,
) -> Result<()> {
    match format {
        TraceFormat::Csv => {
            writeln!(out, "# version: {}", header.version)?;
            writeln!(out, "# seed: {}", header.seed)?;
            writeln!(out, "# solver: {}", header.solver)?;
            writeln!(out, "# problem: {}", header.problem)?;
            writeln!(
                out,
                "# status: {}",
                serde_json::to_value(header.status)
                    .expect("status")
                    .as_str()
                    .unwrap_or("")
            )?;
            writeln!(out, "# config: {}", header.config)?;
            writeln!(out, "# timestamp: {}", header.timestamp)?;
            for ev in &trace.events {
                writeln!(
                    out,
                    "# event: {}",
                    serde_json::to_string(ev).expect("event serializes")
                )?;
            }
            writeln!(out, "{CSV_COLUMNS}")?;
            for r in &trace.records {
                writeln!(out, "{}", csv_row(r))?;
            }
        }
        TraceFormat::Json => {
            let doc = JsonTrace {
                header,
                records: &trace.records,
                events: &trace.events,
            };
            serde_json::to_writer_pretty(&mut *out, &doc).map_err(std::io::Error::from)?;
            writeln!(out)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::{ProblemSpec, SolverKind};

    fn header() -> TraceHeader {
        let cfg = ExperimentConfig::new(ProblemSpec::Quartic { a: 1.0 }, SolverKind::Egm);
        TraceHeader::new(&cfg, SolveStatus::Converged)
    }

    fn trace() -> Trace {
        Trace {
            records: vec![
                IterationRecord {
                    iter: 0,
                    norm_f: 2.5,
                    step_norm: 0.0,
                    stepsize_or_delta: 1.0,
                    rho: None,
                    accepted: true,
                    dm_ratio: None,
                    wall_ns: 0,
                },
                IterationRecord {
                    iter: 1,
                    norm_f: 1e-7,
                    step_norm: 0.25,
                    stepsize_or_delta: 0.5,
                    rho: Some(0.9),
                    accepted: false,
                    dm_ratio: Some(0.125),
                    wall_ns: 17,
                },
            ],
            events: Vec::new(),
            iterates: Vec::new(),
        }
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        write_trace(&mut buf, &header(), &trace(), TraceFormat::Csv).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let body: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(body[0], CSV_COLUMNS);
        assert_eq!(body[1], "0,2.5e0,0e0,1e0,,true,,0");
        assert_eq!(body[2], "1,1e-7,2.5e-1,5e-1,9e-1,false,1.25e-1,17");
        assert_eq!(
            text.lines()
                .filter(|l| l.starts_with("# timestamp:"))
                .count(),
            1
        );
        assert!(text.contains("# status: converged"));
    }

    #[test]
    fn json_layout() {
        let mut buf = Vec::new();
        write_trace(&mut buf, &header(), &trace(), TraceFormat::Json).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(v["records"].as_array().unwrap().len(), 2);
        assert_eq!(v["header"]["seed"], 0);
        assert!(v["records"][0]["rho"].is_null());
    }
}
