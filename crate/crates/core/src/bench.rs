//! Benchmark experiments described in JSON and reported as CSV rows.

use std::io::{Read, Write};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cdf::StepCdf;
use crate::domain::{Dataset, LabeledDataset, OrderedDomain};
use crate::error::{Error, Result};
use crate::interior_point::{ExactMedian, InteriorPointSolver, RecPrefix};
use crate::learning::{pac_learner, ErmLearner, ThresholdLearner};
use crate::release::{dkw_sample_size, release_from_learner, AccuracyParams, EmpiricalLearner, Thresh};
use crate::rng::RandomSource;
use crate::stats::{normal_quantile, wilson_interval};

const CONFIDENCE: f64 = 0.95;

fn default_solvers() -> Vec<String> {
    vec!["rec_prefix".into(), "exact_median".into()]
}

fn default_releasers() -> Vec<String> {
    vec!["thresh".into(), "empirical_subsample".into()]
}

fn default_learners() -> Vec<String> {
    vec!["pac_learn".into(), "erm".into()]
}

/// An experiment over a parameter grid, selected by its `experiment` field.
/// Private mechanisms run below their guaranteed sizes when the grid asks
/// for it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "snake_case")]
pub enum BenchSpec {
    /// Interior point success rate against dataset size, for uniform data.
    RecPrefixUtility {
        widths: Vec<u32>,
        sizes: Vec<u64>,
        eps: f64,
        beta: f64,
        delta: f64,
        trials: u64,
        seed: u64,
        #[serde(default = "default_solvers")]
        mechanisms: Vec<String>,
    },
    /// Largest threshold error against `alpha` at a fixed size.
    ReleaseError {
        width: u32,
        n: u64,
        alphas: Vec<f64>,
        eps: f64,
        beta: f64,
        delta: f64,
        trials: u64,
        seed: u64,
        #[serde(default = "default_releasers")]
        mechanisms: Vec<String>,
    },
    /// Generalization error of threshold learners against sample size, with
    /// a uniform source and a random target cutoff.
    LearningError {
        width: u32,
        sizes: Vec<u64>,
        alpha: f64,
        beta: f64,
        eps: f64,
        delta: f64,
        trials: u64,
        seed: u64,
        #[serde(default = "default_learners")]
        mechanisms: Vec<String>,
    },
}

impl BenchSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid benchmark spec: {e}")))
    }

    pub fn name(&self) -> &'static str {
        match self {
            BenchSpec::RecPrefixUtility { .. } => "rec_prefix_utility",
            BenchSpec::ReleaseError { .. } => "release_error",
            BenchSpec::LearningError { .. } => "learning_error",
        }
    }

    fn validate(&self) -> Result<()> {
        let (names, known): (&[String], &[&str]) = match self {
            BenchSpec::RecPrefixUtility { mechanisms, .. } => (mechanisms, &["rec_prefix", "exact_median"]),
            BenchSpec::ReleaseError { mechanisms, .. } => (mechanisms, &["thresh", "empirical_subsample", "exact"]),
            BenchSpec::LearningError { mechanisms, .. } => (mechanisms, &["pac_learn", "erm"]),
        };
        match names.iter().find(|n| !known.contains(&n.as_str())) {
            Some(bad) => Err(Error::Config(format!(
                "unknown mechanism {bad:?} for {}; expected one of {}",
                self.name(),
                known.join(", ")
            ))),
            None => Ok(()),
        }
    }
}

/// One aggregated measurement with a two-sided confidence interval.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub experiment: String,
    pub mechanism: String,
    pub width: u32,
    pub parameter: String,
    pub value: f64,
    pub metric: String,
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
    pub trials: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub rows: Vec<ResultRow>,
}

impl ExperimentResult {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let rows = csv::Reader::from_reader(reader).deserialize().collect::<std::result::Result<_, _>>()?;
        Ok(ExperimentResult { rows })
    }

    pub fn find(&self, mechanism: &str, metric: &str, value: f64) -> Option<&ResultRow> {
        self.rows.iter().find(|r| r.mechanism == mechanism && r.metric == metric && r.value == value)
    }
}

struct Point<'a> {
    experiment: &'a str,
    mechanism: &'a str,
    width: u32,
    parameter: &'a str,
    value: f64,
}

impl Point<'_> {
    fn rate(&self, metric: &str, successes: u64, trials: u64) -> Result<ResultRow> {
        let ci = wilson_interval(successes, trials, CONFIDENCE)?;
        Ok(self.row(metric, successes as f64 / trials as f64, ci.lower, ci.upper, trials))
    }

    fn mean(&self, metric: &str, samples: &[f64]) -> ResultRow {
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = if n > 1.0 { samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
        let half = normal_quantile(CONFIDENCE) * (var / n).sqrt();
        self.row(metric, mean, mean - half, mean + half, samples.len() as u64)
    }

    fn row(&self, metric: &str, estimate: f64, lower: f64, upper: f64, trials: u64) -> ResultRow {
        ResultRow {
            experiment: self.experiment.into(),
            mechanism: self.mechanism.into(),
            width: self.width,
            parameter: self.parameter.into(),
            value: self.value,
            metric: metric.into(),
            estimate,
            lower,
            upper,
            trials,
        }
    }
}

fn point_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn uniform_rows(domain: &OrderedDomain, n: u64, rng: &mut RandomSource) -> Vec<u64> {
    let top = if domain.bit_width() >= 64 { u64::MAX } else { (1u64 << domain.bit_width()) - 1 };
    (0..n).map(|_| rng.random_range(0..=top)).collect()
}

fn run_trials<T: Send>(
    seed: u64,
    trials: u64,
    f: impl Fn(&mut RandomSource) -> Result<T> + Sync + Send,
) -> Result<Vec<T>> {
    (0..trials).into_par_iter().map(|t| f(&mut RandomSource::for_trial(seed, t))).collect()
}

/// Runs every grid point of `spec`; each point draws its trials from its own
/// streams of the spec's seed.
pub fn run_benchmark(spec: &BenchSpec) -> Result<ExperimentResult> {
    spec.validate()?;
    let experiment = spec.name();
    let mut rows = Vec::new();
    let mut index = 0usize;
    match spec {
        BenchSpec::RecPrefixUtility { widths, sizes, eps, beta, delta, trials, seed, mechanisms } => {
            let rec = RecPrefix::new(*beta, *eps, *delta)?.allow_undersized(true);
            for &width in widths {
                if width > 64 {
                    return Err(Error::Config(format!("width {width} exceeds 64 bits")));
                }
                let domain = OrderedDomain::new(width)?;
                for &n in sizes {
                    for mech in mechanisms {
                        index += 1;
                        let outcomes = run_trials(point_seed(*seed, index), *trials, |rng| {
                            let mut rows = uniform_rows(&domain, n, rng);
                            rows.sort_unstable();
                            let x = match mech.as_str() {
                                "rec_prefix" => rec.solve_sorted(&domain, &rows, rng)?,
                                _ => ExactMedian.solve_sorted(&domain, &rows, rng)?,
                            };
                            Ok(!rows.is_empty() && rows[0] <= x && x <= rows[rows.len() - 1])
                        })?;
                        let point = Point { experiment, mechanism: mech, width, parameter: "n", value: n as f64 };
                        let wins = outcomes.iter().filter(|&&b| b).count() as u64;
                        rows.push(point.rate("success_rate", wins, *trials)?);
                    }
                }
            }
        }
        BenchSpec::ReleaseError { width, n, alphas, eps, beta, delta, trials, seed, mechanisms } => {
            let domain = OrderedDomain::new(*width)?;
            for &alpha in alphas {
                let acc = AccuracyParams::new(alpha, *beta)?;
                for mech in mechanisms {
                    index += 1;
                    let errors = run_trials(point_seed(*seed, index), *trials, |rng| {
                        let data = Dataset::new(domain, uniform_rows(&domain, *n, rng))?;
                        let exact = StepCdf::empirical(&data);
                        let released = match mech.as_str() {
                            "thresh" => Thresh::new(acc, *eps, *delta)?.allow_undersized(true).run(&data, rng)?.cdf,
                            "empirical_subsample" => release_from_learner(
                                &EmpiricalLearner { samples: dkw_sample_size(alpha, *beta) },
                                &data,
                                rng,
                            )?,
                            _ => exact.clone(),
                        };
                        Ok(released.max_abs_difference(&exact))
                    })?;
                    let point = Point { experiment, mechanism: mech, width: *width, parameter: "alpha", value: alpha };
                    let within = errors.iter().filter(|&&e| e <= alpha).count() as u64;
                    rows.push(point.mean("max_error", &errors));
                    rows.push(point.rate("within_alpha", within, *trials)?);
                }
            }
        }
        BenchSpec::LearningError { width, sizes, alpha, beta, eps, delta, trials, seed, mechanisms } => {
            if *width > 63 {
                return Err(Error::Config("learning benchmarks support widths up to 63 bits".into()));
            }
            let domain = OrderedDomain::new(*width)?;
            let pac = pac_learner(*alpha, *beta, *eps, *delta)?.allow_undersized(true);
            let scale = (1u64 << width) as f64;
            for &n in sizes {
                for mech in mechanisms {
                    index += 1;
                    let errors = run_trials(point_seed(*seed, index), *trials, |rng| {
                        let cutoff = rng.random_range(0..1u64 << width);
                        let rows = uniform_rows(&domain, n, rng).into_iter().map(|y| (y, y <= cutoff)).collect();
                        let data = LabeledDataset::new(domain, rows)?;
                        let h = match mech.as_str() {
                            "pac_learn" => pac.learn(&data, rng)?,
                            _ => ErmLearner { samples: n }.learn(&data, rng)?,
                        };
                        Ok(h.cutoff.abs_diff(cutoff) as f64 / scale)
                    })?;
                    let point = Point { experiment, mechanism: mech, width: *width, parameter: "n", value: n as f64 };
                    let within = errors.iter().filter(|&&e| e <= 2.0 * alpha).count() as u64;
                    rows.push(point.mean("generalization_error", &errors));
                    rows.push(point.rate("within_2alpha", within, *trials)?);
                }
            }
        }
    }
    Ok(ExperimentResult { rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_experiment_or_mechanism_is_a_config_error() {
        let bad = r#"{"experiment":"nope","trials":1}"#;
        assert!(matches!(BenchSpec::from_json(bad), Err(Error::Config(_))));
        let spec = BenchSpec::from_json(
            r#"{"experiment":"rec_prefix_utility","widths":[8],"sizes":[10],"eps":1,"beta":0.1,
               "delta":0.1,"trials":2,"seed":0,"mechanisms":["median_of_means"]}"#,
        )
        .unwrap();
        assert!(matches!(run_benchmark(&spec), Err(Error::Config(_))));
    }

    #[test]
    fn small_utility_grid() {
        let spec = BenchSpec::from_json(
            r#"{"experiment":"rec_prefix_utility","widths":[8],"sizes":[50],"eps":1,"beta":0.1,
               "delta":0.1,"trials":20,"seed":3}"#,
        )
        .unwrap();
        let result = run_benchmark(&spec).unwrap();
        assert_eq!(result.rows.len(), 2);
        let exact = result.find("exact_median", "success_rate", 50.0).unwrap();
        assert_eq!(exact.estimate, 1.0);
        assert!(exact.lower < 1.0 && exact.upper == 1.0);
    }

    #[test]
    fn csv_round_trip() {
        let spec = BenchSpec::from_json(
            r#"{"experiment":"learning_error","width":12,"sizes":[200],"alpha":0.1,"beta":0.1,
               "eps":1,"delta":0.1,"trials":5,"seed":1,"mechanisms":["erm"]}"#,
        )
        .unwrap();
        let result = run_benchmark(&spec).unwrap();
        let mut buf = Vec::new();
        result.write_csv(&mut buf).unwrap();
        assert_eq!(ExperimentResult::read_csv(&buf[..]).unwrap(), result);
    }
}
