//! Private release of all threshold queries, and distribution learning
//! under the Kolmogorov distance.
//!
//! [`Thresh`] cuts the sorted input into noisy blocks, replaces every block
//! by an interior point, and releases the counts of the representatives with
//! the dyadic tree mechanism. [`Thresh2`] perturbs quantile boundaries with
//! tree-correlated noise and returns one interior point per block.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cdf::StepCdf;
use crate::domain::{Dataset, Element, OrderedDomain};
use crate::error::{check_positive, check_unit_open, Error, Result};
use crate::interior_point::{InteriorPointSolver, RecPrefix};
use crate::mechanisms::{sample_laplace, PrivacyBudget};
use crate::rng::RandomSource;

/// Accuracy `alpha` holding with probability at least `1 - beta`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccuracyParams {
    pub alpha: f64,
    pub beta: f64,
}

impl AccuracyParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        check_unit_open("alpha", alpha)?;
        check_unit_open("beta", beta)?;
        Ok(AccuracyParams { alpha, beta })
    }
}

/// Whether tree-mechanism node counts receive Laplace noise.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum NoiseMode {
    #[default]
    Laplace,
    /// Exact counts; for debugging and oracle comparisons only.
    Disabled,
}

fn ceil_log2(k: usize) -> u32 {
    if k <= 1 {
        0
    } else {
        usize::BITS - (k - 1).leading_zeros()
    }
}

/// Round up `x`, treating values within floating-point noise of an integer as
/// that integer.
fn ceil_tolerant(x: f64) -> f64 {
    (x - 1e-9).ceil()
}

/// The tree mechanism's error bound `4 log(1/beta) log^2.5(K) / (eps n)`.
pub fn tree_error_bound(beta: f64, eps: f64, n: u64, universe: u64) -> f64 {
    4.0 * (1.0 / beta).log2() * (universe as f64).log2().powf(2.5) / (eps * n as f64)
}

/// Noisy prefix fractions `#{rows with index <= i} / n` for every index of a
/// universe with the given per-element counts.
///
/// A complete binary tree is laid over the universe; each node below the
/// root holds its count plus `Lap(2L/eps)` for `L = ceil(log2 K)`, and a prefix
/// answer sums at most `L` nodes. The full-universe prefix is `n` exactly.
/// Replacing one row moves at most two counts per level, so the node vector
/// has L1 sensitivity `2L` and the release is `eps`-DP.
pub fn tree_prefix_answers(counts: &[u64], eps: f64, mode: NoiseMode, rng: &mut RandomSource) -> Result<Vec<f64>> {
    check_positive("epsilon", eps)?;
    let n: u64 = counts.iter().sum();
    if counts.is_empty() || n == 0 {
        return Ok(vec![0.0; counts.len()]);
    }
    let levels = ceil_log2(counts.len());
    let size = 1usize << levels;
    let scale = 2.0 * levels as f64 / eps;
    let mut exact: Vec<u64> = counts.to_vec();
    exact.resize(size, 0);
    let mut noisy: Vec<Vec<f64>> = Vec::with_capacity(levels as usize);
    for _ in 0..levels {
        let mut layer = Vec::with_capacity(exact.len());
        for &c in &exact {
            let noise = match mode {
                NoiseMode::Laplace => sample_laplace(scale, rng)?,
                NoiseMode::Disabled => 0.0,
            };
            layer.push(c as f64 + noise);
        }
        noisy.push(layer);
        exact = exact.chunks(2).map(|p| p.iter().sum()).collect();
    }
    let answers = (0..counts.len())
        .map(|i| {
            let len = i + 1;
            if len == size {
                return 1.0;
            }
            let mut pos = 0usize;
            let mut sum = 0.0;
            for j in (0..levels).rev() {
                if len & (1 << j) != 0 {
                    sum += noisy[j as usize][pos >> j];
                    pos += 1 << j;
                }
            }
            sum / n as f64
        })
        .collect();
    Ok(answers)
}

/// The tree mechanism over a whole small domain (width at most 24 bits).
pub fn tree_release(data: &Dataset<u64>, eps: f64, mode: NoiseMode, rng: &mut RandomSource) -> Result<StepCdf<u64>> {
    let width = data.domain().bit_width();
    if width > 24 {
        return Err(Error::Parameter(format!("tree release needs a domain of at most 24 bits, got {width}")));
    }
    let mut counts = vec![0u64; 1 << width];
    for &x in data.rows() {
        counts[x as usize] += 1;
    }
    let answers = tree_prefix_answers(&counts, eps, mode, rng)?;
    StepCdf::from_raw_answers(*data.domain(), (0..1u64 << width).collect(), &answers)
}

/// An algorithm answering every threshold query `t -> #{x_i <= t} / n`.
pub trait ThresholdReleaser<E: Element>: Send + Sync {
    fn required_rows(&self, domain: &OrderedDomain) -> Result<u64>;
    fn release(&self, data: &Dataset<E>, rng: &mut RandomSource) -> Result<StepCdf<E>>;
    fn budget(&self) -> PrivacyBudget;
    /// Accuracy the release is designed for.
    fn alpha(&self) -> f64;
}

/// Non-private baseline: the exact empirical CDF.
#[derive(Clone, Copy, Debug)]
pub struct ExactRelease {
    pub alpha: f64,
}

impl<E: Element> ThresholdReleaser<E> for ExactRelease {
    fn required_rows(&self, _domain: &OrderedDomain) -> Result<u64> {
        Ok(1)
    }

    fn release(&self, data: &Dataset<E>, _rng: &mut RandomSource) -> Result<StepCdf<E>> {
        Ok(StepCdf::empirical(data))
    }

    fn budget(&self) -> PrivacyBudget {
        PrivacyBudget { epsilon: f64::INFINITY, delta: 0.0 }
    }

    fn alpha(&self) -> f64 {
        self.alpha
    }
}

/// Feeds exactly `m` rows of a sorted block to a solver: the first `m` when
/// the block is larger, otherwise the block padded with `max X`.
fn solve_block<E: Element, S: InteriorPointSolver<E>>(
    solver: &S,
    domain: &OrderedDomain,
    block: &[E],
    m: usize,
    rng: &mut RandomSource,
) -> Result<(E, bool)> {
    let fitted: std::borrow::Cow<[E]> = if block.len() >= m {
        std::borrow::Cow::Borrowed(&block[..m])
    } else {
        let mut rows = block.to_vec();
        rows.resize(m, domain.max_element());
        std::borrow::Cow::Owned(rows)
    };
    let point = solver.solve_sorted(domain, &fitted, rng)?;
    let interior = match (fitted.first(), fitted.last()) {
        (Some(lo), Some(hi)) => *lo <= point && point <= *hi,
        _ => true,
    };
    Ok((point, interior))
}

fn solve_blocks<E: Element, S: InteriorPointSolver<E>>(
    solver: &S,
    domain: &OrderedDomain,
    sorted: &[E],
    boundaries: &[usize],
    m: usize,
    rng: &mut RandomSource,
) -> Result<Vec<(E, bool)>> {
    let streams: Vec<RandomSource> = (1..boundaries.len()).map(|_| rng.fork()).collect();
    boundaries
        .par_windows(2)
        .zip(streams)
        .map(|(w, mut stream)| solve_block(solver, domain, &sorted[w[0]..w[1]], m, &mut stream))
        .collect()
}

/// Diagnostics of one [`Thresh`] run, measured against the raw input. They
/// are not differentially private and exist for testing the utility proof.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThreshReport {
    pub blocks: usize,
    pub solver_rows: u64,
    /// Block boundaries `t_0 = 0 <= t_1 <= ... <= t_k <= n` into the sorted rows.
    pub boundaries: Vec<usize>,
    /// Every row falls into some block.
    pub exhausted: bool,
    /// Every solver call returned an interior point of its input.
    pub all_interior: bool,
    pub max_block_rows: usize,
    /// `5 alpha n / 12`.
    pub block_limit: f64,
    /// Largest error of the tree answers against the exact representative counts.
    pub tree_max_error: f64,
    /// `alpha / 6`.
    pub tree_limit: f64,
}

impl ThreshReport {
    pub fn blocks_within_limit(&self) -> bool {
        self.max_block_rows as f64 <= self.block_limit
    }

    pub fn tree_within_limit(&self) -> bool {
        self.tree_max_error <= self.tree_limit
    }
}

#[derive(Clone, Debug)]
pub struct ThreshRelease<E> {
    pub cdf: StepCdf<E>,
    pub representatives: Vec<E>,
    pub report: ThreshReport,
}

/// Threshold release from an interior point solver.
///
/// With a solver that errs with probability at most `alpha beta / 24` on `m`
/// rows and `(eps, delta)` privacy, the release is `(alpha, beta)`-accurate on
/// `max(6m/alpha, 25 log(24/beta) log^2.5(6/alpha) / (alpha eps))` rows and
/// `(5 eps, (1 + e^eps) delta)`-DP.
#[derive(Clone, Debug)]
pub struct Thresh<S = RecPrefix> {
    acc: AccuracyParams,
    eps: f64,
    solver: S,
    tree_noise: NoiseMode,
    allow_undersized: bool,
}

impl Thresh<RecPrefix> {
    pub fn new(acc: AccuracyParams, eps: f64, delta: f64) -> Result<Self> {
        let solver = RecPrefix::new(acc.alpha * acc.beta / 24.0, eps, delta)?;
        Thresh::with_solver(acc, eps, solver)
    }
}

impl<S> Thresh<S> {
    /// `eps` drives the block-size noise and the tree mechanism.
    pub fn with_solver(acc: AccuracyParams, eps: f64, solver: S) -> Result<Self> {
        check_positive("epsilon", eps)?;
        Ok(Thresh { acc, eps, solver, tree_noise: NoiseMode::Laplace, allow_undersized: false })
    }

    pub fn allow_undersized(mut self, allow: bool) -> Self {
        self.allow_undersized = allow;
        self
    }

    pub fn tree_noise(mut self, mode: NoiseMode) -> Self {
        self.tree_noise = mode;
        self
    }

    pub fn accuracy(&self) -> AccuracyParams {
        self.acc
    }

    pub fn solver(&self) -> &S {
        &self.solver
    }

    /// `k = ceil(6 / alpha)`.
    pub fn block_count(&self) -> usize {
        ceil_tolerant(6.0 / self.acc.alpha) as usize
    }

    /// Row-count floor from the tree mechanism's accuracy requirement.
    pub fn noise_rows(&self) -> u64 {
        let a = self.acc.alpha;
        ceil_tolerant(25.0 * (24.0 / self.acc.beta).log2() * (6.0 / a).log2().powf(2.5) / (a * self.eps)) as u64
    }
}

impl<S> Thresh<S> {
    pub fn run<E>(&self, data: &Dataset<E>, rng: &mut RandomSource) -> Result<ThreshRelease<E>>
    where
        E: Element,
        S: InteriorPointSolver<E>,
    {
        let domain = *data.domain();
        let required = ThresholdReleaser::<E>::required_rows(self, &domain)?;
        if !self.allow_undersized && (data.len() as u64) < required {
            return Err(Error::Sizing { required, actual: data.len() as u64 });
        }
        let sorted = data.sorted_rows();
        let n = sorted.len();
        let m = self.solver.required_rows(&domain)? as usize;
        let k = self.block_count();
        let step = self.acc.alpha * n as f64 / 3.0;

        let mut boundaries = Vec::with_capacity(k + 1);
        boundaries.push(0usize);
        for _ in 0..k {
            let prev = *boundaries.last().unwrap();
            let raw = prev as f64 + step + sample_laplace(1.0 / self.eps, rng)?;
            boundaries.push((raw.round().max(prev as f64) as usize).min(n));
        }

        let solved = solve_blocks(&self.solver, &domain, &sorted, &boundaries, m, rng)?;
        let mut reps: Vec<E> = Vec::with_capacity(k + 1);
        reps.push(domain.min_element());
        reps.extend(solved.iter().map(|(p, _)| p.clone()));

        let mut universe = reps.clone();
        universe.sort_unstable();
        universe.dedup();
        let mut counts = vec![0u64; universe.len()];
        let mut u = 0;
        for x in &sorted {
            while u + 1 < universe.len() && universe[u + 1] <= *x {
                u += 1;
            }
            counts[u] += 1;
        }
        let answers = tree_prefix_answers(&counts, self.eps, self.tree_noise, rng)?;

        let mut seen = 0u64;
        let mut tree_max_error = 0.0f64;
        for (c, a) in counts.iter().zip(&answers) {
            seen += c;
            let exact = if n == 0 { 0.0 } else { seen as f64 / n as f64 };
            tree_max_error = tree_max_error.max((exact - a).abs());
        }

        let report = ThreshReport {
            blocks: k,
            solver_rows: m as u64,
            exhausted: *boundaries.last().unwrap() == n,
            all_interior: solved.iter().all(|(_, ok)| *ok),
            max_block_rows: boundaries.windows(2).map(|w| w[1] - w[0]).max().unwrap_or(0),
            block_limit: 5.0 * self.acc.alpha * n as f64 / 12.0,
            tree_max_error,
            tree_limit: self.acc.alpha / 6.0,
            boundaries,
        };
        let cdf = StepCdf::from_raw_answers(domain, universe, &answers)?;
        Ok(ThreshRelease { cdf, representatives: reps, report })
    }
}

impl<E: Element, S: InteriorPointSolver<E>> ThresholdReleaser<E> for Thresh<S> {
    fn required_rows(&self, domain: &OrderedDomain) -> Result<u64> {
        let m = self.solver.required_rows(domain)? as f64;
        Ok((ceil_tolerant(6.0 * m / self.acc.alpha) as u64).max(self.noise_rows()))
    }

    fn release(&self, data: &Dataset<E>, rng: &mut RandomSource) -> Result<StepCdf<E>> {
        Ok(self.run(data, rng)?.cdf)
    }

    fn budget(&self) -> PrivacyBudget {
        let inner = self.solver.budget();
        PrivacyBudget {
            epsilon: 3.0 * self.eps + 2.0 * inner.epsilon,
            delta: (1.0 + inner.epsilon.exp()) * inner.delta,
        }
    }

    fn alpha(&self) -> f64 {
        self.acc.alpha
    }
}

/// `k = 3/alpha` rounded up to a power of two, and the correspondingly
/// reduced `alpha = 3/k`.
pub fn quantile_leaf_count(alpha: f64) -> (usize, f64) {
    let k = (ceil_tolerant(3.0 / alpha) as usize).next_power_of_two();
    (k, 3.0 / k as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresh2Report {
    pub leaves: usize,
    pub effective_alpha: f64,
    pub solver_rows: u64,
    /// `T_0 <= ... <= T_{k-1}` into the sorted rows.
    pub boundaries: Vec<usize>,
    /// Tree-correlated perturbations `eta_1, ..., eta_{k-2}`.
    pub noise: Vec<f64>,
    /// `11 log^2.5(1/alpha) / eps`.
    pub noise_bound: f64,
    pub all_interior: bool,
}

impl Thresh2Report {
    pub fn max_abs_noise(&self) -> f64 {
        self.noise.iter().fold(0.0, |m, e| m.max(e.abs()))
    }
}

#[derive(Clone, Debug)]
pub struct Thresh2Output<E> {
    /// Approximate `(alpha/3)`-quantiles, one per block.
    pub quantiles: Vec<E>,
    pub report: Thresh2Report,
}

/// Approximate quantiles from an interior point solver with boundary noise
/// drawn from a dyadic tree.
#[derive(Clone, Debug)]
pub struct Thresh2<S = RecPrefix> {
    acc: AccuracyParams,
    eps: f64,
    solver: S,
    allow_undersized: bool,
}

impl Thresh2<RecPrefix> {
    pub fn new(acc: AccuracyParams, eps: f64, delta: f64) -> Result<Self> {
        let (_, alpha) = quantile_leaf_count(acc.alpha);
        let solver = RecPrefix::new(alpha * acc.beta / 6.0, eps, delta)?;
        Thresh2::with_solver(acc, eps, solver)
    }
}

impl<S> Thresh2<S> {
    pub fn with_solver(acc: AccuracyParams, eps: f64, solver: S) -> Result<Self> {
        check_positive("epsilon", eps)?;
        Ok(Thresh2 { acc, eps, solver, allow_undersized: false })
    }

    pub fn allow_undersized(mut self, allow: bool) -> Self {
        self.allow_undersized = allow;
        self
    }

    pub fn effective_alpha(&self) -> f64 {
        quantile_leaf_count(self.acc.alpha).1
    }

    pub fn noise_bound(&self) -> f64 {
        11.0 * (1.0 / self.effective_alpha()).log2().powf(2.5) / self.eps
    }

    pub fn required_rows<E: Element>(&self, domain: &OrderedDomain) -> Result<u64>
    where
        S: InteriorPointSolver<E>,
    {
        let a = self.effective_alpha();
        let m = self.solver.required_rows(domain)? as f64;
        let noise_rows = 99.0 * (1.0 / a).log2().powf(2.5) / (a * self.eps);
        Ok(ceil_tolerant((6.0 * m / a).max(noise_rows)) as u64)
    }

    /// Moving one row shifts a contiguous range of boundaries, which the tree
    /// absorbs by moving at most `2 log k` nodes by one; at scale
    /// `log k / (2 eps)` that costs `4 eps`, plus `2 eps` for the two blocks
    /// handed to the solver.
    pub fn budget<E: Element>(&self) -> PrivacyBudget
    where
        S: InteriorPointSolver<E>,
    {
        let inner = self.solver.budget();
        PrivacyBudget {
            epsilon: 4.0 * self.eps + 2.0 * inner.epsilon,
            delta: (1.0 + inner.epsilon.exp()) * inner.delta,
        }
    }

    pub fn run<E>(&self, data: &Dataset<E>, rng: &mut RandomSource) -> Result<Thresh2Output<E>>
    where
        E: Element,
        S: InteriorPointSolver<E>,
    {
        let domain = *data.domain();
        let required = self.required_rows::<E>(&domain)?;
        if !self.allow_undersized && (data.len() as u64) < required {
            return Err(Error::Sizing { required, actual: data.len() as u64 });
        }
        let sorted = data.sorted_rows();
        let n = sorted.len() as f64;
        let (k, alpha) = quantile_leaf_count(self.acc.alpha);
        let depth = ceil_log2(k);
        let scale = depth as f64 / (2.0 * self.eps);

        let mut nodes: Vec<Vec<f64>> = Vec::with_capacity(depth as usize + 1);
        for level in 0..=depth {
            let layer = (0..1usize << level).map(|_| sample_laplace(scale, rng)).collect::<Result<Vec<_>>>()?;
            nodes.push(layer);
        }
        let eta = |i: usize| -> f64 { (0..=depth).map(|l| nodes[l as usize][i >> (depth - l)]).sum() };

        let clamp = |x: f64, lo: usize| -> usize { (x.round().max(lo as f64) as usize).min(sorted.len()) };
        let mut noise = Vec::with_capacity(k.saturating_sub(2));
        let mut boundaries = Vec::with_capacity(k);
        boundaries.push(clamp(alpha * n / 6.0, 0));
        for i in 1..k - 1 {
            let e = eta(i);
            noise.push(e);
            let prev = *boundaries.last().unwrap();
            boundaries.push(clamp(alpha * n / 6.0 + i as f64 * alpha * n / 3.0 + e, prev));
        }
        let prev = *boundaries.last().unwrap();
        boundaries.push(clamp(n - alpha * n / 6.0, prev));

        let m = self.solver.required_rows(&domain)? as usize;
        let solved = solve_blocks(&self.solver, &domain, &sorted, &boundaries, m, rng)?;
        let report = Thresh2Report {
            leaves: k,
            effective_alpha: alpha,
            solver_rows: m as u64,
            boundaries,
            noise,
            noise_bound: self.noise_bound(),
            all_interior: solved.iter().all(|(_, ok)| *ok),
        };
        Ok(Thresh2Output { quantiles: solved.into_iter().map(|(p, _)| p).collect(), report })
    }
}

/// Rows needed to pad a dataset of `n` rows for a release at accuracy `alpha`:
/// `n / (8 alpha)`, rounded up so the padding splits evenly.
pub fn padded_release_size(n: u64, alpha: f64) -> u64 {
    let target = (ceil_tolerant(n as f64 / (8.0 * alpha)) as u64).max(n);
    target + (target - n) % 2
}

/// Interior point from a threshold release: pad with equal numbers of
/// `min X` and `max X`, release, and return the smallest threshold whose
/// answer reaches `1/2 - alpha`.
///
/// With `alpha`-accurate answers every threshold below `min D` answers at
/// most `1/2 - 3 alpha` and `max D` answers at least `1/2 + 3 alpha`, so the
/// returned point is interior.
pub fn interior_point_from_release<E, R>(releaser: &R, data: &Dataset<E>, rng: &mut RandomSource) -> Result<E>
where
    E: Element,
    R: ThresholdReleaser<E>,
{
    let domain = *data.domain();
    let alpha = releaser.alpha();
    let n = data.len() as u64;
    let total = padded_release_size(n, alpha);
    let pad = ((total - n) / 2) as usize;
    let mut rows = Vec::with_capacity(total as usize);
    rows.extend(std::iter::repeat_n(domain.min_element(), pad));
    rows.extend_from_slice(data.rows());
    rows.extend(std::iter::repeat_n(domain.max_element(), pad));
    let cdf = releaser.release(&Dataset::from_trusted(domain, rows), rng)?;
    let target = 0.5 - alpha;
    cdf.breakpoints()
        .iter()
        .zip(cdf.values())
        .find(|(_, v)| **v >= target)
        .map(|(t, _)| t.clone())
        .ok_or_else(|| Error::Protocol("no released threshold reaches the median band".into()))
}

/// Samples needed for the empirical CDF to be within `alpha` in Kolmogorov
/// distance with probability `1 - beta`: `2 ln(2/beta) / alpha^2`.
pub fn dkw_sample_size(alpha: f64, beta: f64) -> u64 {
    ceil_tolerant(2.0 * (2.0 / beta).ln() / (alpha * alpha)) as u64
}

/// Learns an unknown distribution's CDF from i.i.d. samples.
pub trait DistributionLearner<E: Element>: Send + Sync {
    fn sample_size(&self, domain: &OrderedDomain) -> Result<u64>;
    fn learn(&self, samples: &Dataset<E>, rng: &mut RandomSource) -> Result<StepCdf<E>>;
    fn budget(&self) -> PrivacyBudget;
}

/// A release of the sample's thresholds, projected onto valid CDFs.
#[derive(Clone, Debug)]
pub struct ReleaseLearner<R> {
    releaser: R,
    acc: AccuracyParams,
    allow_undersized: bool,
}

impl<R> ReleaseLearner<R> {
    pub fn new(releaser: R, acc: AccuracyParams) -> Self {
        ReleaseLearner { releaser, acc, allow_undersized: false }
    }

    pub fn allow_undersized(mut self, allow: bool) -> Self {
        self.allow_undersized = allow;
        self
    }
}

impl<E: Element, R: ThresholdReleaser<E>> DistributionLearner<E> for ReleaseLearner<R> {
    fn sample_size(&self, domain: &OrderedDomain) -> Result<u64> {
        Ok(self.releaser.required_rows(domain)?.max(dkw_sample_size(self.acc.alpha, self.acc.beta)))
    }

    fn learn(&self, samples: &Dataset<E>, rng: &mut RandomSource) -> Result<StepCdf<E>> {
        let required = self.sample_size(samples.domain())?;
        if !self.allow_undersized && (samples.len() as u64) < required {
            return Err(Error::Sizing { required, actual: samples.len() as u64 });
        }
        Ok(self.releaser.release(samples, rng)?.project_to_distribution())
    }

    fn budget(&self) -> PrivacyBudget {
        self.releaser.budget()
    }
}

/// Private distribution learning through [`Thresh`]; within Kolmogorov
/// distance `2 alpha` of the source with probability `1 - 2 beta`.
pub fn learn_distribution<E: Element>(
    samples: &Dataset<E>,
    acc: AccuracyParams,
    eps: f64,
    delta: f64,
    rng: &mut RandomSource,
) -> Result<StepCdf<E>> {
    ReleaseLearner::new(Thresh::new(acc, eps, delta)?, acc).learn(samples, rng)
}

/// Non-private baseline: the empirical CDF of a fixed number of samples.
#[derive(Clone, Copy, Debug)]
pub struct EmpiricalLearner {
    pub samples: u64,
}

impl<E: Element> DistributionLearner<E> for EmpiricalLearner {
    fn sample_size(&self, _domain: &OrderedDomain) -> Result<u64> {
        Ok(self.samples)
    }

    fn learn(&self, samples: &Dataset<E>, _rng: &mut RandomSource) -> Result<StepCdf<E>> {
        Ok(StepCdf::empirical(samples))
    }

    fn budget(&self) -> PrivacyBudget {
        PrivacyBudget { epsilon: f64::INFINITY, delta: 0.0 }
    }
}

/// Threshold release from a distribution learner: draw the learner's sample
/// size from the rows with replacement and learn on it.
pub fn release_from_learner<E, L>(learner: &L, data: &Dataset<E>, rng: &mut RandomSource) -> Result<StepCdf<E>>
where
    E: Element,
    L: DistributionLearner<E>,
{
    if data.is_empty() {
        return Err(Error::Parameter("cannot subsample an empty dataset".into()));
    }
    let m = learner.sample_size(data.domain())? as usize;
    let rows = data.rows();
    let sample: Vec<E> = (0..m).map(|_| rows[rng.random_range(0..rows.len())].clone()).collect();
    learner.learn(&Dataset::from_trusted(*data.domain(), sample), rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interior_point::ExactMedian;

    fn d(w: u32) -> OrderedDomain {
        OrderedDomain::new(w).unwrap()
    }

    #[test]
    fn tree_without_noise_is_exact() {
        let rows: Vec<u64> = (0..500u64).map(|i| (i * i) % 64).collect();
        let data = Dataset::new(d(6), rows).unwrap();
        let cdf = tree_release(&data, 1.0, NoiseMode::Disabled, &mut RandomSource::seed_from_u64(0)).unwrap();
        let exact = StepCdf::empirical(&data);
        for t in 0..64u64 {
            assert_eq!(cdf.value_at(&t), exact.value_at(&t), "threshold {t}");
        }
    }

    #[test]
    fn tree_prefix_sums_for_odd_universe() {
        let counts = [3u64, 0, 2, 5, 1];
        let answers = tree_prefix_answers(&counts, 1.0, NoiseMode::Disabled, &mut RandomSource::seed_from_u64(0)).unwrap();
        assert_eq!(answers, vec![3.0 / 11.0, 3.0 / 11.0, 5.0 / 11.0, 10.0 / 11.0, 1.0]);
    }

    #[test]
    fn block_counts() {
        let t = Thresh::new(AccuracyParams::new(0.1, 0.1).unwrap(), 1.0, 0.1).unwrap();
        assert_eq!(t.block_count(), 60);
        assert_eq!(quantile_leaf_count(0.25), (16, 3.0 / 16.0));
        assert_eq!(quantile_leaf_count(0.75), (4, 0.75));
    }

    #[test]
    fn exact_release_reduction_on_constant_data() {
        let data = Dataset::new(d(8), vec![77u64; 10]).unwrap();
        let x = interior_point_from_release(&ExactRelease { alpha: 0.05 }, &data, &mut RandomSource::seed_from_u64(0))
            .unwrap();
        assert_eq!(x, 77);
    }

    #[test]
    fn exact_release_reduction_on_two_clusters() {
        let mut rows = vec![3u64; 10];
        rows.extend(vec![7u64; 10]);
        let data = Dataset::new(d(4), rows).unwrap();
        let x = interior_point_from_release(&ExactRelease { alpha: 0.05 }, &data, &mut RandomSource::seed_from_u64(0))
            .unwrap();
        assert!((3..=7).contains(&x));
    }

    #[test]
    fn thresh_with_exact_solver_tracks_empirical_cdf() {
        let acc = AccuracyParams::new(0.1, 0.1).unwrap();
        let rows: Vec<u64> = (0..20_000u64).map(|i| (i * 7) % 1024).collect();
        let data = Dataset::new(d(10), rows).unwrap();
        let thresh = Thresh::with_solver(acc, 1.0, ExactMedian).unwrap().allow_undersized(true);
        let out = thresh.run(&data, &mut RandomSource::seed_from_u64(9)).unwrap();
        assert!(out.report.exhausted && out.report.all_interior);
        let err = out.cdf.max_abs_difference(&StepCdf::empirical(&data));
        assert!(err <= 0.1, "error {err}");
    }

    #[test]
    fn thresh2_with_exact_solver_on_constant_data() {
        let acc = AccuracyParams::new(0.25, 0.1).unwrap();
        let data = Dataset::new(d(10), vec![500u64; 4000]).unwrap();
        let t2 = Thresh2::with_solver(acc, 1.0, ExactMedian).unwrap().allow_undersized(true);
        let out = t2.run(&data, &mut RandomSource::seed_from_u64(1)).unwrap();
        assert_eq!(out.quantiles.len(), 15);
        assert!(out.quantiles.iter().all(|q| *q == 500));
    }

    #[test]
    fn padded_size_is_even_split() {
        assert_eq!(padded_release_size(10, 0.05), 26);
        assert_eq!(padded_release_size(11, 0.05), 29);
    }

    #[test]
    fn release_from_constant_database_is_exact() {
        let data = Dataset::new(d(6), vec![9u64; 90]).unwrap();
        let cdf = release_from_learner(&EmpiricalLearner { samples: 10 }, &data, &mut RandomSource::seed_from_u64(4))
            .unwrap();
        assert_eq!(cdf.max_abs_difference(&StepCdf::empirical(&data)), 0.0);
    }
}
