//! Recursive sampler of databases on which private mechanisms rarely return
//! an interior point.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use rand::Rng;

use super::radix::MixedRadixWord;
use crate::error::{Error, Result};
use crate::rng::RandomSource;

pub const DEFAULT_DIGIT_BUDGET: usize = 4096;

/// Largest size, in bits, computed exactly by [`HardDistParams::size`].
pub const SIZE_BIT_BUDGET: u64 = 1 << 24;

pub fn default_delta(level: u32) -> f64 {
    1.0 / (50.0 * f64::from(level) * f64::from(level))
}

#[derive(Clone, Copy, Debug)]
pub struct HardDistParams {
    /// Privacy parameter `delta(j)` at level `j`; the radix is `1 / delta(j)`.
    pub delta: fn(u32) -> f64,
    /// Words longer than this are truncated and flagged.
    pub digit_budget: usize,
}

impl Default for HardDistParams {
    fn default() -> Self {
        HardDistParams { delta: default_delta, digit_budget: DEFAULT_DIGIT_BUDGET }
    }
}

impl HardDistParams {
    /// `b(j) = 1 / delta(j)`, rounded up.
    pub fn radix(&self, level: u32) -> u64 {
        ((1.0 / (self.delta)(level)) - 1e-9).ceil().max(2.0) as u64
    }

    /// Domain size `S(level)`: `S(1) = 2`, `S(j + 1) = b(j)^S(j)`.
    pub fn size(&self, level: u32) -> Result<BigUint> {
        if level == 0 {
            return Err(Error::Parameter("levels start at 1".into()));
        }
        let mut s = BigUint::from(2u32);
        for j in 1..level {
            s = checked_pow(self.radix(j), &s, SIZE_BIT_BUDGET)?;
        }
        Ok(s)
    }

    /// Radix of level-`level` words: 2 at level 1, `b(level - 1)` above.
    pub fn word_radix(&self, level: u32) -> u64 {
        if level <= 1 {
            2
        } else {
            self.radix(level - 1)
        }
    }

    /// Digits per word at `level` and whether the budget truncated them.
    pub fn word_len(&self, level: u32) -> (usize, bool) {
        if level <= 1 {
            return (1, false);
        }
        capped_len(self.size(level - 1).ok(), self.digit_budget)
    }

    /// Bound on the interior-point success probability of any
    /// `(eps, delta(level))`-private mechanism on level-`level` databases:
    /// `e^eps / (e^eps + 1) + (e^eps + 1) * sum_j delta(j)`.
    pub fn success_bound(&self, eps: f64, level: u32) -> f64 {
        let e = eps.exp();
        let sum: f64 = (1..=level).map(self.delta).sum();
        e / (e + 1.0) + (e + 1.0) * sum
    }
}

pub(crate) fn capped_len(size: Option<BigUint>, budget: usize) -> (usize, bool) {
    match size.and_then(|s| s.to_usize()) {
        Some(s) if s <= budget => (s, false),
        _ => (budget, true),
    }
}

/// `base^exp`, failing when the result would exceed `bit_budget` bits.
pub(crate) fn checked_pow(base: u64, exp: &BigUint, bit_budget: u64) -> Result<BigUint> {
    let e = exp.to_u64().ok_or(Error::Overflow { budget: bit_budget })?;
    let bits = (base as f64).log2() * e as f64;
    if bits > bit_budget as f64 {
        return Err(Error::Overflow { budget: bit_budget });
    }
    let mut result = BigUint::one();
    let mut b = BigUint::from(base);
    let mut e = e;
    while e > 0 {
        if e & 1 == 1 {
            result *= &b;
        }
        b = &b * &b;
        e >>= 1;
    }
    Ok(result)
}

/// A sampled database: `rows[0]` is the anchor `y_0`, and at levels above 1
/// row `i` agrees with it on the first `x_i` digits, where `x_i` is row `i - 1`
/// of the inner database.
#[derive(Clone, Debug)]
pub struct HardDatabase {
    pub level: u32,
    pub rows: Vec<MixedRadixWord>,
    /// The inner database the agreement lengths were read from.
    pub inner: Option<Box<HardDatabase>>,
    /// Set when some level's words were cut at the digit budget.
    pub truncated: bool,
}

impl HardDatabase {
    pub fn min(&self) -> &MixedRadixWord {
        self.rows.iter().min().unwrap()
    }

    pub fn max(&self) -> &MixedRadixWord {
        self.rows.iter().max().unwrap()
    }

    pub fn is_interior(&self, x: &MixedRadixWord) -> bool {
        self.min() <= x && x <= self.max()
    }
}

/// Samples a database of `level` rows. Level 1 is `(0)` or `(1)` with equal
/// probability.
pub fn hard_dist_sample(level: u32, params: &HardDistParams, rng: &mut RandomSource) -> Result<HardDatabase> {
    if level == 0 {
        return Err(Error::Parameter("levels start at 1".into()));
    }
    if level == 1 {
        let bit = rng.random_range(0..2u64);
        return Ok(HardDatabase {
            level,
            rows: vec![MixedRadixWord::new(vec![bit], 2)?],
            inner: None,
            truncated: false,
        });
    }
    let inner = hard_dist_sample(level - 1, params, rng)?;
    let (len, cut) = params.word_len(level);
    let anchor = MixedRadixWord::random(len, params.word_radix(level), rng);
    let mut rows = Vec::with_capacity(level as usize);
    rows.push(anchor.clone());
    for x in &inner.rows {
        rows.push(MixedRadixWord::agreeing_with(&anchor, x.value_capped(len), rng));
    }
    let truncated = cut || inner.truncated;
    Ok(HardDatabase { level, rows, inner: Some(Box::new(inner)), truncated })
}
