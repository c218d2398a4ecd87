use std::str::FromStr;

use nalgebra::DVector;
use rand_distr::{Distribution, StandardNormal};

use crate::dims::PrimalDualPoint;
use crate::error::{Error, Result};
use crate::problems::MinimaxProblem;
use crate::rng::{self, streams};

/// The twelve starting points used for the two-dimensional quartic study.
pub const QUARTIC_GRID: [(f64, f64); 12] = [
    (-4.0, -2.0),
    (-4.0, 0.0),
    (-4.0, 2.0),
    (-2.0, -4.0),
    (-2.0, 4.0),
    (0.0, -4.0),
    (0.0, 4.0),
    (2.0, -4.0),
    (2.0, 4.0),
    (4.0, -2.0),
    (4.0, 0.0),
    (4.0, 2.0),
];

/// Starting point specification.
///
/// Text forms: `zero`, `saddle`, `saddle-perturbed:<r>`, `random[:<r>]`,
/// `preset:quartic-grid:<i>`, `preset:ac-default`, or an explicit
/// comma-separated vector.
#[derive(Debug, Clone, PartialEq)]
pub enum StartSpec {
    /// Interior start for analytic center, the origin otherwise.
    Default,
    Zero,
    Saddle,
    /// Known saddle plus a random direction of the given norm.
    SaddlePerturbed(f64),
    /// Random direction of the given norm.
    Random(f64),
    QuarticGrid(usize),
    AnalyticCenterDefault,
    Explicit(Vec<f64>),
}

fn bad(message: String) -> Error {
    Error::Config {
        path: "z0".into(),
        message,
    }
}

fn positive(tok: &str) -> Result<f64> {
    match tok.trim().parse::<f64>() {
        Ok(r) if r > 0.0 && r.is_finite() => Ok(r),
        _ => Err(bad(format!("expected a positive radius, got `{tok}`"))),
    }
}

impl FromStr for StartSpec {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let text = text.trim();
        match text {
            "default" => return Ok(StartSpec::Default),
            "zero" => return Ok(StartSpec::Zero),
            "saddle" => return Ok(StartSpec::Saddle),
            "random" => return Ok(StartSpec::Random(1.0)),
            "preset:ac-default" => return Ok(StartSpec::AnalyticCenterDefault),
            _ => {}
        }
        if let Some(r) = text.strip_prefix("saddle-perturbed:") {
            return Ok(StartSpec::SaddlePerturbed(positive(r)?));
        }
        if let Some(r) = text.strip_prefix("random:") {
            return Ok(StartSpec::Random(positive(r)?));
        }
        if let Some(i) = text.strip_prefix("preset:quartic-grid:") {
            let idx: usize = i
                .parse()
                .ok()
                .filter(|&k| k < QUARTIC_GRID.len())
                .ok_or_else(|| bad(format!("quartic-grid index must be 0..=11, got `{i}`")))?;
            return Ok(StartSpec::QuarticGrid(idx));
        }
        let values: std::result::Result<Vec<f64>, _> =
            text.split(',').map(|t| t.trim().parse::<f64>()).collect();
        match values {
            Ok(v) if !v.is_empty() => Ok(StartSpec::Explicit(v)),
            _ => Err(bad(format!("unrecognized start `{text}`"))),
        }
    }
}

fn random_direction(len: usize, norm: f64, seed: u64) -> DVector<f64> {
    let mut rng = rng::stream(seed, streams::START);
    loop {
        let v = DVector::from_fn(len, |_, _| StandardNormal.sample(&mut rng));
        let n: f64 = v.norm();
        if n > 0.0 {
            return v * (norm / n);
        }
    }
}

impl StartSpec {
    pub fn resolve(&self, problem: &dyn MinimaxProblem, seed: u64) -> Result<PrimalDualPoint> {
        let dims = problem.dims();
        let total = dims.total();
        let saddle = || {
            problem.known_saddle().ok_or_else(|| {
                bad(format!(
                    "the {} problem has no known saddle",
                    problem.name()
                ))
            })
        };
        let values = match self {
            StartSpec::Default => match problem.default_start() {
                Some(z) => z.into_values(),
                None => DVector::zeros(total),
            },
            StartSpec::Zero => DVector::zeros(total),
            StartSpec::Saddle => saddle()?.into_values(),
            StartSpec::SaddlePerturbed(r) => {
                saddle()?.into_values() + random_direction(total, *r, seed)
            }
            StartSpec::Random(r) => random_direction(total, *r, seed),
            StartSpec::QuarticGrid(i) => {
                if total != 2 {
                    return Err(bad(
                        "quartic-grid presets need a 2-dimensional problem".into()
                    ));
                }
                let (x, y) = QUARTIC_GRID[*i];
                DVector::from_vec(vec![x, y])
            }
            StartSpec::AnalyticCenterDefault => problem
                .default_start()
                .ok_or_else(|| {
                    bad(format!(
                        "the {} problem has no interior preset",
                        problem.name()
                    ))
                })?
                .into_values(),
            StartSpec::Explicit(v) => DVector::from_vec(v.clone()),
        };
        let z = PrimalDualPoint::new(values, dims)?;
        if !problem.in_domain(z.values()) {
            return Err(bad("starting point is outside the problem domain".into()));
        }
        Ok(z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{analytic_center_problem, generate_random_polytope, quartic_problem};

    #[test]
    fn parse_forms() {
        assert_eq!("zero".parse::<StartSpec>().unwrap(), StartSpec::Zero);
        assert_eq!(
            "random".parse::<StartSpec>().unwrap(),
            StartSpec::Random(1.0)
        );
        assert_eq!(
            "random:2".parse::<StartSpec>().unwrap(),
            StartSpec::Random(2.0)
        );
        assert_eq!(
            "saddle-perturbed:0.1".parse::<StartSpec>().unwrap(),
            StartSpec::SaddlePerturbed(0.1)
        );
        assert_eq!(
            "preset:quartic-grid:11".parse::<StartSpec>().unwrap(),
            StartSpec::QuarticGrid(11)
        );
        assert_eq!(
            "1, -2.5".parse::<StartSpec>().unwrap(),
            StartSpec::Explicit(vec![1.0, -2.5])
        );
        assert!("preset:quartic-grid:12".parse::<StartSpec>().is_err());
        assert!("random:-1".parse::<StartSpec>().is_err());
        assert!("nope".parse::<StartSpec>().is_err());
    }

    #[test]
    fn grid_and_random() {
        let q = quartic_problem(10.0);
        let z = StartSpec::QuarticGrid(0).resolve(&q, 0).unwrap();
        assert_eq!(z.values().as_slice(), &[-4.0, -2.0]);
        let r = StartSpec::Random(3.0).resolve(&q, 5).unwrap();
        assert!((r.values().norm() - 3.0).abs() < 1e-12);
        assert_eq!(r, StartSpec::Random(3.0).resolve(&q, 5).unwrap());
        assert!(StartSpec::Saddle.resolve(&q, 0).is_err());
    }

    #[test]
    fn ac_default_matches_problem() {
        let (a, b) = generate_random_polytope(3, 7, 2).unwrap();
        let p = analytic_center_problem(a, b).unwrap();
        let z = StartSpec::Default.resolve(&p, 0).unwrap();
        assert_eq!(z, p.default_start());
    }
}
