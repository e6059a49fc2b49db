//! Binomial confidence intervals for Monte Carlo estimates.

use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF, Normal};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }
}

fn check(successes: u64, trials: u64, confidence: f64) -> Result<()> {
    if trials == 0 || successes > trials {
        return Err(Error::Parameter(format!("{successes} successes out of {trials} trials")));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::Parameter(format!("confidence must lie in (0, 1), got {confidence}")));
    }
    Ok(())
}

/// Two-sided standard normal quantile `z` with `P(|Z| <= z) = confidence`.
pub fn normal_quantile(confidence: f64) -> f64 {
    Normal::new(0.0, 1.0).unwrap().inverse_cdf(0.5 + confidence / 2.0)
}

/// Wilson score interval for a success probability.
pub fn wilson_interval(successes: u64, trials: u64, confidence: f64) -> Result<Interval> {
    check(successes, trials, confidence)?;
    let z = normal_quantile(confidence);
    let n = trials as f64;
    let p = successes as f64 / n;
    let denom = 1.0 + z * z / n;
    let centre = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    let lower = if successes == 0 { 0.0 } else { (centre - half).max(0.0) };
    let upper = if successes == trials { 1.0 } else { (centre + half).min(1.0) };
    Ok(Interval { lower, upper })
}

/// Exact (Clopper–Pearson) interval: each side has miscoverage at most
/// `(1 - confidence) / 2`.
pub fn clopper_pearson(successes: u64, trials: u64, confidence: f64) -> Result<Interval> {
    check(successes, trials, confidence)?;
    let tail = (1.0 - confidence) / 2.0;
    let (k, n) = (successes as f64, trials as f64);
    let lower = if successes == 0 { 0.0 } else { Beta::new(k, n - k + 1.0).unwrap().inverse_cdf(tail) };
    let upper = if successes == trials { 1.0 } else { Beta::new(k + 1.0, n - k).unwrap().inverse_cdf(1.0 - tail) };
    Ok(Interval { lower, upper })
}
