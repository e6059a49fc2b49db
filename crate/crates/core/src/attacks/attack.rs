//! Runs a mechanism as the pirate of a fingerprinting-code coalition and
//! measures how often its output can be traced.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fpc::{fpc_gen, FpcParams, Pirate};
use super::radix::{bit_domain, MixedRadixWord};
use crate::domain::{Element, WideElement};
use crate::error::{Error, Result};
use crate::interior_point::InteriorPointSolver;
use crate::rng::RandomSource;

/// A mechanism mapping a coalition's codewords to one word of the same shape.
pub trait WordMechanism: Send + Sync {
    fn name(&self) -> String;
    fn respond(&self, coalition: &[MixedRadixWord], rng: &mut RandomSource) -> Result<MixedRadixWord>;
}

impl WordMechanism for Pirate {
    fn name(&self) -> String {
        Pirate::name(self).to_string()
    }

    fn respond(&self, coalition: &[MixedRadixWord], rng: &mut RandomSource) -> Result<MixedRadixWord> {
        self.combine(coalition, rng)
    }
}

/// Non-private baseline: the lower median codeword.
#[derive(Clone, Copy, Debug, Default)]
pub struct ExactMedianWords;

impl WordMechanism for ExactMedianWords {
    fn name(&self) -> String {
        "exact_median".into()
    }

    fn respond(&self, coalition: &[MixedRadixWord], rng: &mut RandomSource) -> Result<MixedRadixWord> {
        Pirate::Median.combine(coalition, rng)
    }
}

/// Always answers the smallest word of the domain.
#[derive(Clone, Copy, Debug, Default)]
pub struct ConstantMin;

impl WordMechanism for ConstantMin {
    fn name(&self) -> String {
        "constant_min".into()
    }

    fn respond(&self, coalition: &[MixedRadixWord], _rng: &mut RandomSource) -> Result<MixedRadixWord> {
        let first = coalition.first().ok_or(Error::EmptyCandidates)?;
        Ok(MixedRadixWord::zeros(first.len(), first.radix()))
    }
}

/// Runs a bit-string interior point solver on the radix-2 view of the
/// codewords and maps its answer back to the largest word not above it.
#[derive(Clone, Debug)]
pub struct BitStringSolver<S> {
    pub label: String,
    pub solver: S,
}

impl<S: InteriorPointSolver<WideElement>> WordMechanism for BitStringSolver<S> {
    fn name(&self) -> String {
        self.label.clone()
    }

    fn respond(&self, coalition: &[MixedRadixWord], rng: &mut RandomSource) -> Result<MixedRadixWord> {
        let first = coalition.first().ok_or(Error::EmptyCandidates)?;
        let domain = bit_domain(first.len(), first.radix())?;
        let mut rows: Vec<WideElement> = coalition.iter().map(MixedRadixWord::to_element).collect();
        WideElement::sort_rows(&mut rows, domain.bit_width());
        let point = self.solver.solve_sorted(&domain, &rows, rng)?;
        Ok(MixedRadixWord::from_element(&point, first.len(), first.radix()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackConfig {
    pub users: usize,
    pub xi: f64,
    pub trials: usize,
    pub seed: u64,
}

/// One trial: whether the output was feasible for the coalition and whom the
/// tracer accused (empty for failure).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub feasible: bool,
    pub accused: Option<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AttackReport {
    pub mechanism: String,
    pub config: AttackConfig,
    pub records: Vec<TrialRecord>,
}

impl AttackReport {
    fn rate(&self, pred: impl Fn(&TrialRecord) -> bool) -> f64 {
        if self.records.is_empty() {
            return 0.0;
        }
        self.records.iter().filter(|r| pred(r)).count() as f64 / self.records.len() as f64
    }

    pub fn feasible_rate(&self) -> f64 {
        self.rate(|r| r.feasible)
    }

    /// Fraction of trials in which someone was accused.
    pub fn trace_rate(&self) -> f64 {
        self.rate(|r| r.accused.is_some())
    }

    pub fn failure_rate(&self) -> f64 {
        self.rate(|r| r.accused.is_none())
    }

    /// Feasible outputs that failed to trace.
    pub fn completeness_failures(&self) -> usize {
        self.records.iter().filter(|r| r.feasible && r.accused.is_none()).count()
    }

    /// Accusation rate of each user.
    pub fn accusation_rates(&self) -> Vec<f64> {
        (0..self.config.users).map(|u| self.rate(|r| r.accused == Some(u))).collect()
    }

    /// Accusation rate of the one user left out of the coalition.
    pub fn non_member_rate(&self) -> f64 {
        let outsider = self.config.users - 1;
        self.rate(|r| r.accused == Some(outsider))
    }

    /// CSV with header `trial,feasible,accused`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for r in &self.records {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Coalition of every user but the last.
pub fn default_coalition(users: usize) -> Vec<usize> {
    (0..users.saturating_sub(1)).collect()
}

/// Generates a fresh code each trial, hands the coalition's codewords to
/// `mech`, and traces its output.
pub fn attack_mechanism<M: WordMechanism + ?Sized>(mech: &M, config: &AttackConfig) -> Result<AttackReport> {
    attack_with_coalition(mech, config, &default_coalition(config.users))
}

pub fn attack_with_coalition<M: WordMechanism + ?Sized>(
    mech: &M,
    config: &AttackConfig,
    coalition: &[usize],
) -> Result<AttackReport> {
    if config.users < 2 {
        return Err(Error::Parameter("attacks need at least two users".into()));
    }
    if coalition.is_empty() || coalition.iter().any(|&i| i >= config.users) {
        return Err(Error::Parameter(format!("coalition {coalition:?} is not a non-empty subset of the users")));
    }
    let params = FpcParams::new(config.xi)?;
    let records = (0..config.trials as u64)
        .into_par_iter()
        .map(|trial| {
            let mut rng = RandomSource::for_trial(config.seed, trial);
            let book = fpc_gen(config.users, &params, &mut rng)?;
            let words: Vec<MixedRadixWord> = coalition.iter().map(|&i| book.codewords()[i].clone()).collect();
            let output = mech.respond(&words, &mut rng)?;
            Ok(TrialRecord {
                trial,
                feasible: book.is_feasible(&output, coalition),
                accused: book.trace(&output)?.accused,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AttackReport { mechanism: mech.name(), config: *config, records })
}
