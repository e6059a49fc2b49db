//! Proper learning of threshold functions `c_x(y) = 1 iff y <= x`, and the
//! reductions between learning and the interior point problem.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{Dataset, Element, LabeledDataset, OrderedDomain};
use crate::error::{check_unit_open, Error, Result};
use crate::interior_point::{InteriorPointSolver, RecPrefix};
use crate::mechanisms::PrivacyBudget;
use crate::rng::RandomSource;

fn ceil_tolerant(x: f64) -> u64 {
    (x - 1e-9).ceil() as u64
}

/// The threshold function labelling `y` with 1 exactly when `y <= cutoff`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ThresholdHypothesis<E = u64> {
    pub cutoff: E,
}

impl<E: Element> ThresholdHypothesis<E> {
    pub fn new(cutoff: E) -> Self {
        ThresholdHypothesis { cutoff }
    }

    pub fn predict(&self, y: &E) -> bool {
        *y <= self.cutoff
    }

    /// Fraction of labelled rows the hypothesis gets wrong.
    pub fn empirical_error(&self, data: &LabeledDataset<E>) -> f64 {
        if data.is_empty() {
            return 0.0;
        }
        let wrong = data.rows().iter().filter(|(x, label)| self.predict(x) != *label).count();
        wrong as f64 / data.len() as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub empirical_error: f64,
    /// Error on held-out data, when some was supplied.
    pub generalization_error: Option<f64>,
}

impl ErrorReport {
    pub fn evaluate<E: Element>(
        hypothesis: &ThresholdHypothesis<E>,
        training: &LabeledDataset<E>,
        holdout: Option<&LabeledDataset<E>>,
    ) -> Self {
        ErrorReport {
            empirical_error: hypothesis.empirical_error(training),
            generalization_error: holdout.map(|h| hypothesis.empirical_error(h)),
        }
    }
}

/// A learner returning a threshold hypothesis from labelled rows.
pub trait ThresholdLearner<E: Element>: Send + Sync {
    fn sample_size(&self, domain: &OrderedDomain) -> Result<u64>;
    fn learn(&self, data: &LabeledDataset<E>, rng: &mut RandomSource) -> Result<ThresholdHypothesis<E>>;
    fn budget(&self) -> PrivacyBudget;
}

/// Learns by solving the interior point problem on the rows nearest the
/// label boundary: the largest `ceil(m/2)` rows labelled 1 (padded with
/// `min X`) and the smallest `ceil(m/2)` labelled 0 (padded with `max X`),
/// where `m` is the solver's row requirement.
///
/// An interior point of that sub-database errs on at most `m/2` of the
/// `m / (2 alpha)` input rows. Replacing one input row changes at most two
/// sub-database rows, giving `(2 eps, (1 + e^eps) delta)` privacy.
#[derive(Clone, Debug)]
pub struct BoundaryLearner<S = RecPrefix> {
    alpha: f64,
    min_samples: u64,
    solver: S,
    allow_undersized: bool,
}

impl<S> BoundaryLearner<S> {
    pub fn new(alpha: f64, solver: S) -> Result<Self> {
        check_unit_open("alpha", alpha)?;
        Ok(BoundaryLearner { alpha, min_samples: 0, solver, allow_undersized: false })
    }

    /// Raises the sample requirement to at least `n`.
    pub fn with_min_samples(mut self, n: u64) -> Self {
        self.min_samples = n;
        self
    }

    pub fn allow_undersized(mut self, allow: bool) -> Self {
        self.allow_undersized = allow;
        self
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn solver(&self) -> &S {
        &self.solver
    }
}

/// The boundary sub-database, sorted.
pub fn boundary_rows<E: Element>(data: &LabeledDataset<E>, half: usize) -> Vec<E> {
    let domain = data.domain();
    let mut ones: Vec<E> = data.rows().iter().filter(|(_, l)| *l).map(|(x, _)| x.clone()).collect();
    let mut zeros: Vec<E> = data.rows().iter().filter(|(_, l)| !*l).map(|(x, _)| x.clone()).collect();
    E::sort_rows(&mut ones, domain.bit_width());
    E::sort_rows(&mut zeros, domain.bit_width());

    let mut rows = Vec::with_capacity(2 * half);
    let take_ones = ones.len().min(half);
    rows.extend(std::iter::repeat_n(domain.min_element(), half - take_ones));
    rows.extend_from_slice(&ones[ones.len() - take_ones..]);
    let take_zeros = zeros.len().min(half);
    rows.extend_from_slice(&zeros[..take_zeros]);
    rows.extend(std::iter::repeat_n(domain.max_element(), half - take_zeros));
    E::sort_rows(&mut rows, domain.bit_width());
    rows
}

impl<E: Element, S: InteriorPointSolver<E>> ThresholdLearner<E> for BoundaryLearner<S> {
    fn sample_size(&self, domain: &OrderedDomain) -> Result<u64> {
        let m = self.solver.required_rows(domain)? as f64;
        Ok(ceil_tolerant(m / (2.0 * self.alpha)).max(self.min_samples))
    }

    fn learn(&self, data: &LabeledDataset<E>, rng: &mut RandomSource) -> Result<ThresholdHypothesis<E>> {
        let required = self.sample_size(data.domain())?;
        if !self.allow_undersized && (data.len() as u64) < required {
            return Err(Error::Sizing { required, actual: data.len() as u64 });
        }
        let m = self.solver.required_rows(data.domain())? as usize;
        let rows = boundary_rows(data, m.div_ceil(2));
        Ok(ThresholdHypothesis::new(self.solver.solve_sorted(data.domain(), &rows, rng)?))
    }

    fn budget(&self) -> PrivacyBudget {
        let inner = self.solver.budget();
        PrivacyBudget { epsilon: 2.0 * inner.epsilon, delta: (1.0 + inner.epsilon.exp()) * inner.delta }
    }
}

/// Empirical learner at accuracy `alpha` backed by the recursive-prefix solver
/// with error `beta`.
pub fn empirical_learner(alpha: f64, beta: f64, eps: f64, delta: f64) -> Result<BoundaryLearner> {
    BoundaryLearner::new(alpha, RecPrefix::new(beta, eps, delta)?)
}

/// `alpha`-consistent hypothesis with probability `1 - beta` on any input of
/// the learner's sample size.
pub fn empirical_learn<E: Element>(
    data: &LabeledDataset<E>,
    alpha: f64,
    beta: f64,
    eps: f64,
    delta: f64,
    rng: &mut RandomSource,
) -> Result<ThresholdHypothesis<E>> {
    empirical_learner(alpha, beta, eps, delta)?.learn(data, rng)
}

/// Samples for the generalization step: `4 log(2/beta) / alpha`.
pub fn generalization_sample_size(alpha: f64, beta: f64) -> u64 {
    ceil_tolerant(4.0 * (2.0 / beta).log2() / alpha)
}

/// PAC learner: the empirical learner run on
/// `max(m / (2 alpha), 4 log(2/beta) / alpha)` i.i.d. samples, which has
/// generalization error at most `2 alpha` with probability `1 - 2 beta`.
pub fn pac_learner(alpha: f64, beta: f64, eps: f64, delta: f64) -> Result<BoundaryLearner> {
    Ok(empirical_learner(alpha, beta, eps, delta)?.with_min_samples(generalization_sample_size(alpha, beta)))
}

pub fn pac_learn<E: Element>(
    samples: &LabeledDataset<E>,
    alpha: f64,
    beta: f64,
    eps: f64,
    delta: f64,
    rng: &mut RandomSource,
) -> Result<ThresholdHypothesis<E>> {
    pac_learner(alpha, beta, eps, delta)?.learn(samples, rng)
}

/// Non-private baseline: empirical risk minimization over cutoffs drawn from
/// the data values and `min X`, ties broken toward the largest cutoff so that
/// a data value is preferred over `min X`.
#[derive(Clone, Copy, Debug)]
pub struct ErmLearner {
    pub samples: u64,
}

impl ErmLearner {
    /// `4 ln(2/beta) / alpha` samples.
    pub fn for_accuracy(alpha: f64, beta: f64) -> Self {
        ErmLearner { samples: ceil_tolerant(4.0 * (2.0 / beta).ln() / alpha) }
    }
}

impl<E: Element> ThresholdLearner<E> for ErmLearner {
    fn sample_size(&self, _domain: &OrderedDomain) -> Result<u64> {
        Ok(self.samples)
    }

    fn learn(&self, data: &LabeledDataset<E>, _rng: &mut RandomSource) -> Result<ThresholdHypothesis<E>> {
        let mut rows: Vec<(E, bool)> = data.rows().to_vec();
        rows.sort_unstable();
        // Cutoff min X misclassifies every 1 above it and every 0 at it.
        let at_min: E = data.domain().min_element();
        let mut errors: i64 = rows.iter().filter(|(x, l)| if *x <= at_min { !*l } else { *l }).count() as i64;
        let mut best = (errors, at_min.clone());
        let mut i = 0;
        while i < rows.len() {
            let value = rows[i].0.clone();
            while i < rows.len() && rows[i].0 == value {
                if value > at_min {
                    errors += if rows[i].1 { -1 } else { 1 };
                }
                i += 1;
            }
            if errors <= best.0 {
                best = (errors, value);
            }
        }
        Ok(ThresholdHypothesis::new(best.1))
    }

    fn budget(&self) -> PrivacyBudget {
        PrivacyBudget { epsilon: f64::INFINITY, delta: 0.0 }
    }
}

/// Interior point from a learner at accuracy `alpha`: label the smaller half
/// of the sorted rows 1 and the larger half 0 (an odd middle row is dropped),
/// pad with equally many `(min X, 1)` and `(max X, 0)` rows to `n / (3 alpha)`,
/// and return the learned cutoff. A single row carries no label information,
/// so inputs need at least two rows for the result to be meaningful.
pub fn interior_point_from_learner<E, L>(
    learner: &L,
    data: &Dataset<E>,
    alpha: f64,
    rng: &mut RandomSource,
) -> Result<E>
where
    E: Element,
    L: ThresholdLearner<E>,
{
    check_unit_open("alpha", alpha)?;
    let domain = *data.domain();
    let sorted = data.sorted_rows();
    let n = sorted.len();
    let half = n / 2;
    let target = (ceil_tolerant(n as f64 / (3.0 * alpha)) as usize).max(2 * half);
    let pad = (target - 2 * half).div_ceil(2);
    let mut rows = Vec::with_capacity(2 * (half + pad));
    rows.extend(std::iter::repeat_n((domain.min_element(), true), pad));
    rows.extend(sorted[..half].iter().map(|x| (x.clone(), true)));
    rows.extend(sorted[n - half..].iter().map(|x| (x.clone(), false)));
    rows.extend(std::iter::repeat_n((domain.max_element(), false), pad));
    let labeled = LabeledDataset::new(domain, rows)?;
    Ok(learner.learn(&labeled, rng)?.cutoff)
}

/// Privacy of running an `(eps, delta)` mechanism on `m` rows drawn with
/// replacement from `n`: `(6 eps m / n, exp(6 eps m / n) (4m / n) delta)`.
pub fn subsample_amplify(inner_eps: f64, inner_delta: f64, m: u64, n: u64) -> Result<PrivacyBudget> {
    if !(inner_eps > 0.0 && inner_eps <= 1.0) {
        return Err(Error::Parameter(format!("amplification needs 0 < eps <= 1, got {inner_eps}")));
    }
    if !(0.0..=1.0).contains(&inner_delta) {
        return Err(Error::Parameter(format!("delta must lie in [0, 1], got {inner_delta}")));
    }
    if m == 0 || n < 2 * m {
        return Err(Error::Parameter(format!("amplification needs n >= 2m > 0, got m = {m}, n = {n}")));
    }
    let (m, n) = (m as f64, n as f64);
    let eps = 6.0 * inner_eps * m / n;
    Ok(PrivacyBudget { epsilon: eps, delta: eps.exp() * (4.0 * m / n) * inner_delta })
}

/// Draws `m` rows uniformly with replacement.
pub fn subsample_with_replacement<T: Clone>(rows: &[T], m: usize, rng: &mut RandomSource) -> Vec<T> {
    if rows.is_empty() {
        return Vec::new();
    }
    (0..m).map(|_| rows[rng.random_range(0..rows.len())].clone()).collect()
}

/// Runs an interior point solver on `m` rows subsampled with replacement from
/// `outer_rows` input rows.
#[derive(Clone, Debug)]
pub struct Subsampled<S> {
    pub inner: S,
    pub m: u64,
    pub outer_rows: u64,
}

impl<E: Element, S: InteriorPointSolver<E>> InteriorPointSolver<E> for Subsampled<S> {
    fn required_rows(&self, _domain: &OrderedDomain) -> Result<u64> {
        Ok(self.outer_rows)
    }

    fn solve_sorted(&self, domain: &OrderedDomain, sorted: &[E], rng: &mut RandomSource) -> Result<E> {
        let mut sample = subsample_with_replacement(sorted, self.m as usize, rng);
        E::sort_rows(&mut sample, domain.bit_width());
        self.inner.solve_sorted(domain, &sample, rng)
    }

    /// Falls back to the inner budget when the amplification preconditions fail.
    fn budget(&self) -> PrivacyBudget {
        let inner = self.inner.budget();
        subsample_amplify(inner.epsilon, inner.delta, self.m, self.outer_rows).unwrap_or(inner)
    }
}
