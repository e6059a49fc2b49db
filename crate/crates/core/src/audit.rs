//! Empirical `(eps, delta)` auditing on a fixed pair of neighboring inputs.
//!
//! An audit can refute a privacy claim but never certify one: a low estimate
//! only says this particular pair and output partition found no violation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{Dataset, Element, OrderedDomain};
use crate::error::{Error, Result};
use crate::interior_point::{ExactMedian, InteriorPointSolver, RecPrefix};
use crate::mechanisms::{sample_laplace, PrivacyBudget};
use crate::rng::RandomSource;
use crate::stats::clopper_pearson;

#[derive(Clone, Debug)]
pub struct AuditConfig<D> {
    pub trials: u64,
    pub neighbors: (D, D),
    /// Number of output cells; the mechanism reports a cell index.
    pub cells: usize,
    /// Claimed budget. Its `delta` is subtracted in the estimate.
    pub claimed: PrivacyBudget,
    /// Joint confidence of all intervals behind the estimate.
    pub confidence: f64,
    pub seed: u64,
}

impl<D> AuditConfig<D> {
    pub fn new(first: D, second: D, cells: usize, trials: u64, claimed: PrivacyBudget, seed: u64) -> Self {
        AuditConfig { trials, neighbors: (first, second), cells, claimed, confidence: 0.95, seed }
    }

    pub fn with_confidence(mut self, confidence: f64) -> Self {
        self.confidence = confidence;
        self
    }
}

impl<E: Element> AuditConfig<Dataset<E>> {
    /// Like [`AuditConfig::new`], checking that the datasets differ in exactly
    /// one position.
    pub fn for_datasets(
        first: Dataset<E>,
        second: Dataset<E>,
        cells: usize,
        trials: u64,
        claimed: PrivacyBudget,
        seed: u64,
    ) -> Result<Self> {
        if first.domain() != second.domain() || first.len() != second.len() {
            return Err(Error::Shape("neighboring datasets need the same domain and size".into()));
        }
        let differing = first.rows().iter().zip(second.rows()).filter(|(a, b)| a != b).count();
        if differing != 1 {
            return Err(Error::Shape(format!("datasets differ in {differing} rows, expected exactly 1")));
        }
        Ok(AuditConfig::new(first, second, cells, trials, claimed, seed))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    /// Lower confidence bound on the privacy loss, clamped at 0.
    pub eps_hat: f64,
    /// Plug-in estimate from the observed frequencies (may be infinite).
    pub eps_point: f64,
    /// Upper confidence bound on the largest cell ratio (may be infinite).
    pub eps_upper: f64,
    pub delta: f64,
    pub trials: u64,
    pub counts: Vec<u64>,
    pub neighbor_counts: Vec<u64>,
    pub claimed: PrivacyBudget,
}

impl AuditReport {
    /// Whether the lower bound exceeds the claimed epsilon.
    pub fn refutes_claim(&self) -> bool {
        self.eps_hat > self.claimed.epsilon
    }
}

fn log_ratio(num: f64, den: f64) -> f64 {
    match (num > 0.0, den > 0.0) {
        (false, _) => 0.0,
        (true, false) => f64::INFINITY,
        (true, true) => (num / den).ln().max(0.0),
    }
}

fn tally<D, F>(mech: &F, data: &D, config: &AuditConfig<D>, stream: u64) -> Result<Vec<u64>>
where
    D: Sync,
    F: Fn(&D, &mut RandomSource) -> Result<usize> + Sync,
{
    let cells = config.cells;
    (0..config.trials)
        .into_par_iter()
        .try_fold(
            || vec![0u64; cells],
            |mut acc, t| {
                let mut rng = RandomSource::for_trial(config.seed, 2 * t + stream);
                let cell = mech(data, &mut rng)?;
                *acc.get_mut(cell).ok_or_else(|| Error::Shape(format!("cell {cell} of {cells}")))? += 1;
                Ok(acc)
            },
        )
        .try_reduce(
            || vec![0u64; cells],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                Ok(a)
            },
        )
}

/// Estimates the privacy loss of `mech` on the neighboring pair.
///
/// Each cell's probability on either input gets a Clopper–Pearson interval,
/// Bonferroni-corrected over cells and both directions. The estimate is the
/// largest `ln((lower(p) - delta) / upper(q))` over cells and directions.
pub fn estimate_epsilon<D, F>(mech: F, config: &AuditConfig<D>) -> Result<AuditReport>
where
    D: Sync,
    F: Fn(&D, &mut RandomSource) -> Result<usize> + Sync,
{
    if config.trials == 0 || config.cells == 0 {
        return Err(Error::Parameter("audits need at least one trial and one cell".into()));
    }
    let counts = tally(&mech, &config.neighbors.0, config, 0)?;
    let neighbor_counts = tally(&mech, &config.neighbors.1, config, 1)?;
    let n = config.trials;
    let per_interval = 1.0 - (1.0 - config.confidence) / (2.0 * config.cells as f64);
    let delta = config.claimed.delta;

    let (mut eps_hat, mut eps_point, mut eps_upper) = (0.0f64, 0.0f64, 0.0f64);
    for (&a, &b) in counts.iter().zip(&neighbor_counts) {
        let ia = clopper_pearson(a, n, per_interval)?;
        let ib = clopper_pearson(b, n, per_interval)?;
        let (pa, pb) = (a as f64 / n as f64, b as f64 / n as f64);
        for (p, q, ip, iq) in [(pa, pb, ia, ib), (pb, pa, ib, ia)] {
            eps_hat = eps_hat.max(log_ratio(ip.lower - delta, iq.upper));
            eps_point = eps_point.max(log_ratio(p - delta, q));
            eps_upper = eps_upper.max(log_ratio(ip.upper - delta, iq.lower));
        }
    }
    Ok(AuditReport { eps_hat, eps_point, eps_upper, delta, trials: n, counts, neighbor_counts, claimed: config.claimed })
}

/// Index of the cell containing `value` for cells
/// `(-inf, c_0], (c_0, c_1], ..., (c_last, inf)`.
pub fn cell_of(value: f64, cuts: &[f64]) -> usize {
    cuts.partition_point(|c| *c < value)
}

/// Laplace counting mechanism `#{x = 1} + Lap(1/eps)` on the pair `(0)`, `(1)`,
/// binned at `(-inf, 0], (0, 1], (1, inf)`.
pub fn audit_laplace_count(eps: f64, trials: u64, seed: u64) -> Result<AuditReport> {
    let domain = OrderedDomain::new(1)?;
    let config = AuditConfig::for_datasets(
        Dataset::new(domain, vec![0u64])?,
        Dataset::new(domain, vec![1u64])?,
        3,
        trials,
        PrivacyBudget::pure(eps),
        seed,
    )?;
    estimate_epsilon(
        |d: &Dataset<u64>, rng| {
            let count = d.rows().iter().filter(|&&x| x == 1).count() as f64;
            Ok(cell_of(count + sample_laplace(1.0 / eps, rng)?, &[0.0, 1.0]))
        },
        &config,
    )
}

/// Eight rows spread over the domain, and the same rows with the largest
/// replaced by the smallest.
pub fn spread_neighbors(domain: OrderedDomain) -> Result<(Dataset<u64>, Dataset<u64>)> {
    if domain.bit_width() > 16 {
        return Err(Error::Parameter("element audits use one cell per element; width must be at most 16".into()));
    }
    let top = (1u64 << domain.bit_width()) - 1;
    let rows: Vec<u64> = (0..8).map(|i| i * top / 7).collect();
    let mut other = rows.clone();
    other[7] = 0;
    Ok((Dataset::new(domain, rows)?, Dataset::new(domain, other)?))
}

/// Audits an interior point solver on [`spread_neighbors`], one cell per element.
pub fn audit_solver<S: InteriorPointSolver<u64>>(
    solver: &S,
    domain: OrderedDomain,
    trials: u64,
    claimed: PrivacyBudget,
    seed: u64,
) -> Result<AuditReport> {
    let (first, second) = spread_neighbors(domain)?;
    let config = AuditConfig::for_datasets(first, second, 1 << domain.bit_width(), trials, claimed, seed)?;
    estimate_epsilon(
        |d: &Dataset<u64>, rng| {
            let sorted = d.sorted_rows();
            Ok(solver.solve_sorted(d.domain(), &sorted, rng)? as usize)
        },
        &config,
    )
}

/// Mechanisms selectable by name for auditing.
pub const AUDIT_MECHANISMS: [&str; 4] = ["laplace_count", "rec_prefix", "exact_median", "constant"];

/// Audits a named mechanism at privacy `eps`. `delta` is the claimed delta
/// (and the delta of `rec_prefix`).
pub fn audit_named(name: &str, width: u32, eps: f64, delta: f64, trials: u64, seed: u64) -> Result<AuditReport> {
    let domain = OrderedDomain::new(width)?;
    match name {
        "laplace_count" => audit_laplace_count(eps, trials, seed),
        "rec_prefix" => {
            let solver = RecPrefix::new(0.1, eps, delta)?.allow_undersized(true);
            audit_solver(&solver, domain, trials, PrivacyBudget::new(eps, delta)?, seed)
        }
        "exact_median" => audit_solver(&ExactMedian, domain, trials, PrivacyBudget::new(eps, delta)?, seed),
        "constant" => {
            let (first, second) = spread_neighbors(domain)?;
            let config =
                AuditConfig::for_datasets(first, second, 1 << width, trials, PrivacyBudget::new(eps, delta)?, seed)?;
            estimate_epsilon(|_: &Dataset<u64>, _| Ok(0), &config)
        }
        other => Err(Error::Config(format!(
            "unknown mechanism {other:?}; expected one of {}",
            AUDIT_MECHANISMS.join(", ")
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_mechanism_audits_to_zero() {
        let r = audit_named("constant", 4, 1.0, 0.0, 2000, 1).unwrap();
        assert_eq!((r.eps_hat, r.eps_point), (0.0, 0.0));
    }

    #[test]
    fn exact_median_is_refuted() {
        let r = audit_named("exact_median", 4, 1.0, 1e-6, 2000, 1).unwrap();
        assert!(r.refutes_claim(), "{r:?}");
    }

    #[test]
    fn laplace_estimate_is_below_the_truth() {
        let r = audit_laplace_count(1.0, 100_000, 3).unwrap();
        assert!(r.eps_hat <= 1.0 && r.eps_hat > 0.7, "{r:?}");
        assert!(r.eps_upper >= 1.0);
    }

    #[test]
    fn larger_delta_never_raises_the_estimate() {
        let domain = OrderedDomain::new(1).unwrap();
        let mut last = f64::INFINITY;
        for delta in [0.0, 0.01, 0.05, 0.2] {
            let config = AuditConfig::for_datasets(
                Dataset::new(domain, vec![0u64]).unwrap(),
                Dataset::new(domain, vec![1u64]).unwrap(),
                3,
                20_000,
                PrivacyBudget { epsilon: 1.0, delta },
                9,
            )
            .unwrap();
            let r = estimate_epsilon(
                |d: &Dataset<u64>, rng| Ok(cell_of(d.rows()[0] as f64 + sample_laplace(1.0, rng)?, &[0.0, 1.0])),
                &config,
            )
            .unwrap();
            assert!(r.eps_hat <= last);
            last = r.eps_hat;
        }
    }

    #[test]
    fn config_validation() {
        let domain = OrderedDomain::new(2).unwrap();
        let a = Dataset::new(domain, vec![0u64, 1]).unwrap();
        let b = Dataset::new(domain, vec![2u64, 3]).unwrap();
        assert!(AuditConfig::for_datasets(a.clone(), b, 4, 10, PrivacyBudget::pure(1.0), 0).is_err());
        assert!(AuditConfig::for_datasets(a.clone(), a, 4, 10, PrivacyBudget::pure(1.0), 0).is_err());
        assert!(matches!(audit_named("nope", 4, 1.0, 0.0, 10, 0), Err(Error::Config(_))));
    }

    #[test]
    fn cells_cover_the_line() {
        assert_eq!(cell_of(-3.0, &[0.0, 1.0]), 0);
        assert_eq!(cell_of(0.0, &[0.0, 1.0]), 0);
        assert_eq!(cell_of(0.5, &[0.0, 1.0]), 1);
        assert_eq!(cell_of(1.0, &[0.0, 1.0]), 1);
        assert_eq!(cell_of(7.0, &[0.0, 1.0]), 2);
    }
}
