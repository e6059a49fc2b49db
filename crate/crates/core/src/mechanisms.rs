//! Laplace noise, the exponential and choosing mechanisms, and budget accounting.

use std::collections::BTreeMap;
use std::iter::Sum;
use std::ops::Add;

use serde::{Deserialize, Serialize};

use crate::domain::Element;
use crate::error::{check_positive, check_unit_open, Error, Result};
use crate::rng::RandomSource;

/// An `(epsilon, delta)` differential-privacy guarantee.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PrivacyBudget {
    pub epsilon: f64,
    pub delta: f64,
}

impl PrivacyBudget {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(Error::Parameter(format!("epsilon must be non-negative, got {epsilon}")));
        }
        if !(0.0..=1.0).contains(&delta) {
            return Err(Error::Parameter(format!("delta must lie in [0, 1], got {delta}")));
        }
        Ok(PrivacyBudget { epsilon, delta })
    }

    pub fn pure(epsilon: f64) -> Self {
        PrivacyBudget { epsilon, delta: 0.0 }
    }
}

impl Add for PrivacyBudget {
    type Output = PrivacyBudget;

    fn add(self, rhs: Self) -> Self {
        PrivacyBudget { epsilon: self.epsilon + rhs.epsilon, delta: self.delta + rhs.delta }
    }
}

impl Sum for PrivacyBudget {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(PrivacyBudget::default(), Add::add)
    }
}

/// Basic sequential composition: the component-wise sum.
pub fn compose(budgets: &[PrivacyBudget]) -> PrivacyBudget {
    budgets.iter().copied().sum()
}

/// Quantile function of the zero-mean Laplace distribution with scale `b`.
pub fn laplace_inverse_cdf(b: f64, p: f64) -> f64 {
    if p < 0.5 {
        b * (2.0 * p).ln()
    } else if p > 0.5 {
        -b * (2.0 * (1.0 - p)).ln()
    } else {
        0.0
    }
}

/// One draw from `Lap(b)`.
pub fn sample_laplace(b: f64, rng: &mut RandomSource) -> Result<f64> {
    check_positive("Laplace scale", b)?;
    Ok(laplace_inverse_cdf(b, rng.open_unit()))
}

/// A score `q(S, f)` for candidate solutions `f` on data `S`.
pub trait QualityFunction<D: ?Sized> {
    type Candidate: Clone;

    fn score(&self, data: &D, candidate: &Self::Candidate) -> u64;

    fn sensitivity(&self) -> f64 {
        1.0
    }
}

/// A sensitivity-1 quality function where adding a row raises at most
/// `growth_bound` scores, and the empty dataset scores zero everywhere.
pub trait BoundedGrowth<D: ?Sized>: QualityFunction<D> {
    fn growth_bound(&self) -> u64;

    /// Every candidate with a positive score, paired with that score. Bounded
    /// growth guarantees these are discoverable from the rows themselves.
    fn positive_candidates(&self, data: &D) -> Vec<(Self::Candidate, u64)>;
}

/// Samples index `i` with probability proportional to `exp(eps * scores[i] / (2 * sensitivity))`.
pub fn sample_by_scores(scores: &[f64], eps: f64, sensitivity: f64, rng: &mut RandomSource) -> Result<usize> {
    if scores.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    check_positive("epsilon", eps)?;
    check_positive("sensitivity", sensitivity)?;
    let top = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let factor = eps / (2.0 * sensitivity);
    let weights: Vec<f64> = scores.iter().map(|s| (factor * (s - top)).exp()).collect();
    let total: f64 = weights.iter().sum();
    let mut target = rng.open_unit() * total;
    for (i, w) in weights.iter().enumerate() {
        if target < *w {
            return Ok(i);
        }
        target -= w;
    }
    Ok(weights.iter().rposition(|w| *w > 0.0).unwrap_or(scores.len() - 1))
}

/// The exponential mechanism over an explicit candidate list.
pub fn exponential_mechanism<D, Q>(
    data: &D,
    quality: &Q,
    candidates: &[Q::Candidate],
    eps: f64,
    rng: &mut RandomSource,
) -> Result<Q::Candidate>
where
    D: ?Sized,
    Q: QualityFunction<D>,
{
    let scores: Vec<f64> = candidates.iter().map(|c| quality.score(data, c) as f64).collect();
    let i = sample_by_scores(&scores, eps, quality.sensitivity(), rng)?;
    Ok(candidates[i].clone())
}

/// Parameters of the choosing mechanism; requires `0 < eps <= 2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChoosingParams {
    pub beta: f64,
    pub eps: f64,
    pub delta: f64,
}

impl ChoosingParams {
    pub fn validate(&self) -> Result<()> {
        check_unit_open("beta", self.beta)?;
        check_unit_open("delta", self.delta)?;
        if !(self.eps > 0.0 && self.eps <= 2.0) {
            return Err(Error::Parameter(format!("choosing mechanism needs 0 < eps <= 2, got {}", self.eps)));
        }
        Ok(())
    }

    /// The noisy-OPT cutoff `(8/eps) ln(4k / (beta eps delta))`.
    pub fn threshold(&self, growth: u64) -> f64 {
        8.0 / self.eps * (4.0 * growth as f64 / (self.beta * self.eps * self.delta)).ln()
    }

    /// A quality level that guarantees a nonzero-score output w.p. `1 - beta`.
    pub fn score_one_level(&self, growth: u64) -> f64 {
        2.0 * self.threshold(growth)
    }

    /// Additive loss below OPT on a database of `m` rows, holding w.p. `1 - beta`.
    pub fn utility_loss(&self, growth: u64, m: usize) -> f64 {
        16.0 / self.eps * (4.0 * growth as f64 * m as f64 / (self.beta * self.eps * self.delta)).ln()
    }
}

/// The choosing mechanism. `None` is the failure symbol.
pub fn choosing_mechanism<D, Q>(
    data: &D,
    quality: &Q,
    params: ChoosingParams,
    rng: &mut RandomSource,
) -> Result<Option<Q::Candidate>>
where
    D: ?Sized,
    Q: BoundedGrowth<D>,
{
    params.validate()?;
    let good = quality.positive_candidates(data);
    let opt = good.iter().map(|(_, s)| *s).max().unwrap_or(0);
    let noisy_opt = opt as f64 + sample_laplace(4.0 / params.eps, rng)?;
    if noisy_opt < params.threshold(quality.growth_bound()) || good.is_empty() {
        return Ok(None);
    }
    let scores: Vec<f64> = good.iter().map(|(_, s)| *s as f64).collect();
    let i = sample_by_scores(&scores, params.eps / 2.0, 1.0, rng)?;
    Ok(Some(good[i].0.clone()))
}

/// `q(S, v)` = number of rows equal to `v`; growth bound 1.
#[derive(Clone, Copy, Debug, Default)]
pub struct ValueFrequency;

impl<E: Element> QualityFunction<[E]> for ValueFrequency {
    type Candidate = E;

    fn score(&self, data: &[E], candidate: &E) -> u64 {
        data.iter().filter(|x| *x == candidate).count() as u64
    }
}

impl<E: Element> BoundedGrowth<[E]> for ValueFrequency {
    fn growth_bound(&self) -> u64 {
        1
    }

    fn positive_candidates(&self, data: &[E]) -> Vec<(E, u64)> {
        let mut counts: BTreeMap<&E, u64> = BTreeMap::new();
        for x in data {
            *counts.entry(x).or_default() += 1;
        }
        counts.into_iter().map(|(x, c)| (x.clone(), c)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laplace_median_is_zero() {
        assert_eq!(laplace_inverse_cdf(1.0, 0.5), 0.0);
        assert!((laplace_inverse_cdf(1.0, 0.25) + 2f64.ln()).abs() < 1e-12);
        assert!((laplace_inverse_cdf(2.0, 0.75) - 2.0 * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn laplace_rejects_bad_scale() {
        let mut rng = RandomSource::seed_from_u64(0);
        assert!(sample_laplace(0.0, &mut rng).is_err());
        assert!(sample_laplace(-1.0, &mut rng).is_err());
    }

    #[test]
    fn composition_examples() {
        let b = PrivacyBudget::new(1.0, 0.01).unwrap();
        let c = compose(&[b, b]);
        assert!((c.epsilon - 2.0).abs() < 1e-12 && (c.delta - 0.02).abs() < 1e-12);
        assert_eq!(compose(&[b]), b);
        assert_eq!(compose(&[]), PrivacyBudget::new(0.0, 0.0).unwrap());
    }

    #[test]
    fn budget_validation() {
        assert!(PrivacyBudget::new(-1.0, 0.0).is_err());
        assert!(PrivacyBudget::new(1.0, 1.5).is_err());
    }

    #[test]
    fn single_candidate_always_wins() {
        let mut rng = RandomSource::seed_from_u64(3);
        let data = [5u64, 5, 6];
        for _ in 0..100 {
            assert_eq!(exponential_mechanism(&data[..], &ValueFrequency, &[9u64], 1.0, &mut rng).unwrap(), 9);
        }
    }

    #[test]
    fn empty_candidates_error() {
        let mut rng = RandomSource::seed_from_u64(3);
        let data: [u64; 0] = [];
        assert!(matches!(
            exponential_mechanism(&data[..], &ValueFrequency, &[], 1.0, &mut rng),
            Err(Error::EmptyCandidates)
        ));
    }

    #[test]
    fn choosing_rejects_large_eps() {
        let mut rng = RandomSource::seed_from_u64(3);
        let params = ChoosingParams { beta: 0.1, eps: 2.5, delta: 0.1 };
        assert!(choosing_mechanism(&[1u64][..], &ValueFrequency, params, &mut rng).is_err());
    }

    #[test]
    fn choosing_on_empty_database_fails_closed() {
        let params = ChoosingParams { beta: 0.1, eps: 1.0, delta: 0.1 };
        let data: [u64; 0] = [];
        let mut bottoms = 0;
        for t in 0..2000 {
            let mut rng = RandomSource::for_trial(11, t);
            if choosing_mechanism(&data[..], &ValueFrequency, params, &mut rng).unwrap().is_none() {
                bottoms += 1;
            }
        }
        assert_eq!(bottoms, 2000);
    }
}
