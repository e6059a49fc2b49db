//! The recursive-prefix solver for the interior point problem.
//!
//! Given rows `x_1..x_n`, an interior point is any `x` with
//! `min x_i <= x <= max x_i`. The solver pairs up shuffled rows, recurses on
//! the lengths of their common prefixes, privately picks a popular prefix of
//! the returned length and pads it with zeros or ones.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::domain::{Dataset, Element, OrderedDomain};
use crate::error::{check_positive, check_unit_open, Error, Result};
use crate::mechanisms::{
    choosing_mechanism, sample_by_scores, sample_laplace, BoundedGrowth, ChoosingParams, PrivacyBudget,
    QualityFunction,
};
use crate::rng::RandomSource;

/// Leading constant of the end-to-end sample size bound.
pub const SAMPLE_SIZE_CONSTANT: f64 = 18500.0;
/// Per-level constant guaranteeing every recursive call sees enough rows.
pub const LEVEL_SIZE_CONSTANT: f64 = 2312.0;
/// Per-level row count needed by the utility argument.
pub const LEVEL_UTILITY_CONSTANT: f64 = 1540.0;
/// Multiplier in the number `k` of largest rows set aside at each level.
pub const SET_ASIDE_CONSTANT: f64 = 386.0;

/// Rows the solver needs for its `(1 - beta)` guarantee on `domain` at the
/// given top-level parameters.
pub fn required_sample_size(domain: &OrderedDomain, beta: f64, eps: f64, delta: f64) -> Result<u64> {
    check_unit_open("beta", beta)?;
    check_unit_open("delta", delta)?;
    check_positive("epsilon", eps)?;
    let depth = domain.recursion_depth() as f64;
    let n = SAMPLE_SIZE_CONSTANT / eps * depth.exp2() * depth * (4.0 * depth / (beta * eps * delta)).ln();
    Ok(n.ceil() as u64)
}

/// `floor((386 / eps) ln(4 / (beta eps delta)))` for per-level parameters.
pub fn set_aside_count(beta: f64, eps: f64, delta: f64) -> u64 {
    (SET_ASIDE_CONSTANT / eps * (4.0 / (beta * eps * delta)).ln()).floor() as u64
}

/// Parameters used at every level of the recursion.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelParams {
    pub beta: f64,
    pub eps: f64,
    pub delta: f64,
    /// Number of largest rows excluded from pairing.
    pub k: u64,
}

/// Per-level bookkeeping from one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelTrace {
    pub bit_width: u32,
    pub rows: usize,
    pub base_case: bool,
    /// Number of prefix-length rows passed to the next level.
    pub paired_rows: usize,
    /// Length of the prefix selected at this level.
    pub prefix_len: Option<u32>,
    pub choosing_failed: bool,
    /// Whether the ones-padded completion was returned.
    pub chose_upper: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecPrefixTrace {
    pub levels: Vec<LevelTrace>,
    pub params: LevelParams,
}

impl RecPrefixTrace {
    pub fn depth(&self) -> u32 {
        self.levels.len() as u32
    }
}

#[derive(Clone, Debug)]
pub struct RecPrefixOutput<E> {
    pub point: E,
    pub trace: RecPrefixTrace,
}

/// A mechanism returning an interior point of its input rows.
pub trait InteriorPointSolver<E: Element>: Send + Sync {
    /// Rows needed for the solver's utility guarantee.
    fn required_rows(&self, domain: &OrderedDomain) -> Result<u64>;

    /// Solves on rows sorted in non-decreasing order, without a sizing check.
    fn solve_sorted(&self, domain: &OrderedDomain, sorted: &[E], rng: &mut RandomSource) -> Result<E>;

    fn budget(&self) -> PrivacyBudget;

    fn solve(&self, data: &Dataset<E>, rng: &mut RandomSource) -> Result<E> {
        self.solve_sorted(data.domain(), &data.sorted_rows(), rng)
    }
}

/// The recursive-prefix interior point solver with top-level `(beta, eps, delta)`.
///
/// The budget is split evenly over the recursion: each level runs with
/// `beta / 3N`, `eps / 2N`, `delta / 2N` for `N` levels.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecPrefix {
    beta: f64,
    eps: f64,
    delta: f64,
    allow_undersized: bool,
}

impl RecPrefix {
    pub fn new(beta: f64, eps: f64, delta: f64) -> Result<Self> {
        check_unit_open("beta", beta)?;
        check_unit_open("delta", delta)?;
        check_positive("epsilon", eps)?;
        Ok(RecPrefix { beta, eps, delta, allow_undersized: false })
    }

    /// Accept inputs below the required size. Privacy is unaffected; the
    /// utility guarantee no longer applies.
    pub fn allow_undersized(mut self, allow: bool) -> Self {
        self.allow_undersized = allow;
        self
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn level_params(&self, domain: &OrderedDomain) -> LevelParams {
        let depth = domain.recursion_depth() as f64;
        let (beta, eps, delta) = (self.beta / (3.0 * depth), self.eps / (2.0 * depth), self.delta / (2.0 * depth));
        LevelParams { beta, eps, delta, k: set_aside_count(beta, eps, delta) }
    }

    pub fn run<E: Element>(&self, data: &Dataset<E>, rng: &mut RandomSource) -> Result<RecPrefixOutput<E>> {
        let required = required_sample_size(data.domain(), self.beta, self.eps, self.delta)?;
        if !self.allow_undersized && (data.len() as u64) < required {
            return Err(Error::Sizing { required, actual: data.len() as u64 });
        }
        self.run_sorted(data.domain(), &data.sorted_rows(), rng)
    }

    pub fn run_sorted<E: Element>(
        &self,
        domain: &OrderedDomain,
        sorted: &[E],
        rng: &mut RandomSource,
    ) -> Result<RecPrefixOutput<E>> {
        let params = self.level_params(domain);
        ChoosingParams { beta: params.beta, eps: params.eps, delta: params.delta }.validate()?;
        let mut levels = Vec::with_capacity(domain.recursion_depth() as usize);
        let point = level(domain, None, sorted, &params, rng, &mut levels)?;
        Ok(RecPrefixOutput { point, trace: RecPrefixTrace { levels, params } })
    }
}

impl<E: Element> InteriorPointSolver<E> for RecPrefix {
    fn required_rows(&self, domain: &OrderedDomain) -> Result<u64> {
        required_sample_size(domain, self.beta, self.eps, self.delta)
    }

    fn solve_sorted(&self, domain: &OrderedDomain, sorted: &[E], rng: &mut RandomSource) -> Result<E> {
        Ok(self.run_sorted(domain, sorted, rng)?.point)
    }

    fn budget(&self) -> PrivacyBudget {
        PrivacyBudget { epsilon: self.eps, delta: self.delta }
    }

    fn solve(&self, data: &Dataset<E>, rng: &mut RandomSource) -> Result<E> {
        Ok(self.run(data, rng)?.point)
    }
}

/// Non-private baseline: the lower median of the rows (`min X` when empty).
#[derive(Clone, Copy, Debug, Default)]
pub struct ExactMedian;

impl<E: Element> InteriorPointSolver<E> for ExactMedian {
    fn required_rows(&self, _domain: &OrderedDomain) -> Result<u64> {
        Ok(1)
    }

    fn solve_sorted(&self, domain: &OrderedDomain, sorted: &[E], _rng: &mut RandomSource) -> Result<E> {
        Ok(match sorted.len() {
            0 => domain.min_element(),
            n => sorted[(n - 1) / 2].clone(),
        })
    }

    fn budget(&self) -> PrivacyBudget {
        PrivacyBudget { epsilon: f64::INFINITY, delta: 0.0 }
    }
}

fn count_at_most<E: Ord>(sorted: &[E], x: &E) -> usize {
    sorted.partition_point(|r| r <= x)
}

fn count_at_least<E: Ord>(sorted: &[E], x: &E) -> usize {
    sorted.len() - sorted.partition_point(|r| r < x)
}

/// `q(S, x) = min(#{x_j >= x}, #{x_j <= x})`.
pub fn depth_score<E: Ord>(sorted: &[E], x: &E) -> u64 {
    count_at_least(sorted, x).min(count_at_most(sorted, x)) as u64
}

/// Number of rows of a sorted slice sharing each `len`-bit prefix.
struct PrefixAgreement {
    len: u32,
    width: u32,
}

impl<E: Element> QualityFunction<[E]> for PrefixAgreement {
    type Candidate = E;

    fn score(&self, data: &[E], candidate: &E) -> u64 {
        data.iter().filter(|x| x.common_prefix_len(candidate, self.width) >= self.len).count() as u64
    }
}

impl<E: Element> BoundedGrowth<[E]> for PrefixAgreement {
    fn growth_bound(&self) -> u64 {
        1
    }

    fn positive_candidates(&self, sorted: &[E]) -> Vec<(E, u64)> {
        let mut groups: Vec<(E, u64)> = Vec::new();
        for x in sorted {
            let prefix = x.with_suffix(self.len, false, self.width);
            match groups.last_mut() {
                Some((p, c)) if *p == prefix => *c += 1,
                _ => groups.push((prefix, 1)),
            }
        }
        groups
    }
}

fn level<E: Element>(
    domain: &OrderedDomain,
    upper: Option<u64>,
    sorted: &[E],
    params: &LevelParams,
    rng: &mut RandomSource,
    trace: &mut Vec<LevelTrace>,
) -> Result<E> {
    let width = domain.bit_width();
    let slot = trace.len();
    trace.push(LevelTrace {
        bit_width: width,
        rows: sorted.len(),
        base_case: domain.is_base_case(),
        paired_rows: 0,
        prefix_len: None,
        choosing_failed: false,
        chose_upper: false,
    });

    if domain.is_base_case() {
        let last = upper.unwrap_or_else(|| (1u64 << width) - 1);
        let candidates: Vec<E> = (0..=last).map(|v| E::from_u64(v, width)).collect();
        let scores: Vec<f64> = candidates.iter().map(|c| depth_score(sorted, c) as f64).collect();
        let i = sample_by_scores(&scores, params.eps, 1.0, rng)?;
        return Ok(candidates[i].clone());
    }

    let n = sorted.len();
    let keep = n.saturating_sub(2 * params.k as usize);
    let mut shuffled = sorted[..keep].to_vec();
    shuffled.shuffle(rng);
    let mut lengths: Vec<u64> =
        shuffled.chunks_exact(2).map(|pair| pair[0].common_prefix_len(&pair[1], width) as u64).collect();
    let child = domain.child();
    u64::sort_rows(&mut lengths, child.bit_width());
    trace[slot].paired_rows = lengths.len();

    let z = level(&child, Some(width as u64), &lengths, params, rng, trace)?;
    let prefix_len = (z as u32 + 1).min(width);

    let quality = PrefixAgreement { len: prefix_len, width };
    let choosing = ChoosingParams { beta: params.beta, eps: params.eps, delta: params.delta };
    let chosen = choosing_mechanism(sorted, &quality, choosing, rng)?;
    let prefix = match chosen {
        Some(p) => p,
        None => {
            trace[slot].choosing_failed = true;
            E::from_u64(0, width)
        }
    };

    let upper_completion = prefix.with_suffix(prefix_len, true, width);
    let big = sample_laplace(1.0 / params.eps, rng)? + count_at_least(sorted, &upper_completion) as f64;
    let chose_upper = big >= 1.5 * params.k as f64;
    trace[slot].prefix_len = Some(prefix_len);
    trace[slot].chose_upper = chose_upper;
    Ok(if chose_upper { upper_completion } else { prefix.with_suffix(prefix_len, false, width) })
}

/// Whether some row is `<= x` and at least `k` rows are `>= x`.
pub fn is_strong_interior<E: Ord>(sorted: &[E], x: &E, k: u64) -> bool {
    count_at_most(sorted, x) > 0 && count_at_least(sorted, x) as u64 >= k
}

/// Number of pairs `(p[2i], p[2i+1])` at distance at most `r / 12`.
pub fn close_pairs(permutation: &[usize], r: f64) -> usize {
    permutation
        .chunks_exact(2)
        .filter(|pair| (pair[0] as f64 - pair[1] as f64).abs() <= r / 12.0)
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(w: u32) -> OrderedDomain {
        OrderedDomain::new(w).unwrap()
    }

    fn size_oracle(depth: f64, beta: f64, eps: f64, delta: f64) -> f64 {
        18500.0 / eps * 2f64.powf(depth) * depth * (4.0 * depth / (beta * eps * delta)).ln()
    }

    #[test]
    fn sample_size_formula() {
        let n = required_sample_size(&d(16), 0.1, 1.0, 0.1).unwrap();
        assert_eq!(n, (148000.0 * 800f64.ln()).ceil() as u64);
        let n64 = required_sample_size(&d(64), 0.05, 0.5, 0.05).unwrap();
        assert_eq!(n64, size_oracle(3.0, 0.05, 0.5, 0.05).ceil() as u64);
        let shallow = required_sample_size(&d(4), 0.1, 1.0, 0.1).unwrap();
        assert!(shallow < n && n < required_sample_size(&d(64), 0.1, 1.0, 0.1).unwrap());
    }

    #[test]
    fn constant_rows_return_that_value() {
        let dom = d(16);
        let solver = RecPrefix::new(0.1, 1.0, 0.1).unwrap().allow_undersized(true);
        let n = 300_000;
        let rows = vec![40_000u64; n];
        let data = Dataset::new(dom, rows).unwrap();
        let mut hits = 0;
        for t in 0..20 {
            let mut rng = RandomSource::for_trial(5, t);
            if solver.solve(&data, &mut rng).unwrap() == 40_000 {
                hits += 1;
            }
        }
        assert!(hits >= 18, "hits {hits}");
    }

    #[test]
    fn trace_depth_matches_domain() {
        let dom = d(16);
        let solver = RecPrefix::new(0.1, 1.0, 0.1).unwrap().allow_undersized(true);
        let data = Dataset::new(dom, (0..5000u64).collect()).unwrap();
        let out = solver.run(&data, &mut RandomSource::seed_from_u64(1)).unwrap();
        assert_eq!(out.trace.depth(), dom.recursion_depth());
        assert!(out.trace.levels.last().unwrap().base_case);
    }

    #[test]
    fn undersized_input_is_refused() {
        let dom = d(16);
        let solver = RecPrefix::new(0.1, 1.0, 0.1).unwrap();
        let data = Dataset::new(dom, vec![1u64; 100]).unwrap();
        assert!(matches!(solver.run(&data, &mut RandomSource::seed_from_u64(1)), Err(Error::Sizing { .. })));
    }

    #[test]
    fn base_case_stays_in_domain_on_empty_input() {
        let dom = d(3);
        let solver = RecPrefix::new(0.1, 1.0, 0.1).unwrap().allow_undersized(true);
        let data = Dataset::<u64>::new(dom, vec![]).unwrap();
        let x = solver.solve(&data, &mut RandomSource::seed_from_u64(2)).unwrap();
        assert!(x < 8);
    }

    #[test]
    fn prefix_groups_match_brute_force() {
        let rows: Vec<u64> = vec![0b0001, 0b0010, 0b0011, 0b1000, 0b1001, 0b1111];
        let q = PrefixAgreement { len: 2, width: 4 };
        let groups = q.positive_candidates(&rows[..]);
        for (p, c) in &groups {
            assert_eq!(*c, q.score(&rows[..], p));
        }
        assert_eq!(groups, vec![(0b0000, 3), (0b1000, 2), (0b1100, 1)]);
    }

    #[test]
    fn depth_score_examples() {
        let rows = [1u64, 3, 3, 7];
        assert_eq!(depth_score(&rows, &0), 0);
        assert_eq!(depth_score(&rows, &3), 3);
        assert_eq!(depth_score(&rows, &5), 1);
        assert!(is_strong_interior(&rows, &3, 3));
        assert!(!is_strong_interior(&rows, &0, 1));
    }

    #[test]
    fn close_pair_count() {
        assert_eq!(close_pairs(&[0, 1, 5, 9, 3, 4], 12.0), 2);
        assert_eq!(close_pairs(&[0, 1, 5, 9, 3, 4], 11.0), 0);
    }
}
