//! Fingerprinting code whose marking assumption is "the pirate outputs an
//! interior point of the coalition's codewords".

use std::fmt;

use num_bigint::BigUint;
use rand::seq::IndexedRandom;
use serde::{Deserialize, Serialize};

use super::hard_dist::{capped_len, checked_pow, DEFAULT_DIGIT_BUDGET, SIZE_BIT_BUDGET};
use super::radix::MixedRadixWord;
use crate::error::{check_unit_open, Error, Result};
use crate::rng::RandomSource;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FpcParams {
    /// Target soundness error.
    pub xi: f64,
    pub digit_budget: usize,
}

impl FpcParams {
    pub fn new(xi: f64) -> Result<Self> {
        check_unit_open("xi", xi)?;
        Ok(FpcParams { xi, digit_budget: DEFAULT_DIGIT_BUDGET })
    }

    pub fn with_digit_budget(mut self, budget: usize) -> Self {
        self.digit_budget = budget.max(1);
        self
    }

    /// `b(n) = ceil(2 n^2 / xi)`.
    pub fn radix(&self, users: usize) -> u64 {
        ((2.0 * (users * users) as f64 / self.xi) - 1e-9).ceil().max(2.0) as u64
    }

    /// Codeword domain size for `users` users: `S(1) = 1`, `S(n + 1) = b(n)^S(n)`.
    pub fn size(&self, users: usize) -> Result<BigUint> {
        if users == 0 {
            return Err(Error::Parameter("a code needs at least one user".into()));
        }
        let mut s = BigUint::from(1u32);
        for j in 1..users {
            s = checked_pow(self.radix(j), &s, SIZE_BIT_BUDGET)?;
        }
        Ok(s)
    }

    /// Soundness error of the construction: `sum_{j < users} 1 / b(j)`.
    pub fn soundness_error(&self, users: usize) -> f64 {
        (1..users).map(|j| 1.0 / self.radix(j) as f64).sum()
    }
}

/// Outcome of tracing a pirate word: an accused user or failure.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TraceOutcome {
    pub accused: Option<usize>,
}

impl fmt::Display for TraceOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.accused {
            Some(i) => write!(f, "{i}"),
            None => write!(f, "⊥"),
        }
    }
}

/// Codewords for `users` users together with the nested state tracing needs.
///
/// For `n + 1` users the last codeword is uniform, and user `i` agrees with it
/// on the first `x'_i` digits, `x'_i` being user `i`'s codeword in the nested
/// `n`-user code. Users are numbered from 0.
#[derive(Clone, Debug)]
pub struct Codebook {
    users: usize,
    radix: u64,
    word_len: usize,
    /// Whether the word length of this level was cut at the digit budget.
    cut: bool,
    codewords: Vec<MixedRadixWord>,
    inner: Option<Box<Codebook>>,
}

impl Codebook {
    pub fn users(&self) -> usize {
        self.users
    }

    pub fn radix(&self) -> u64 {
        self.radix
    }

    pub fn word_len(&self) -> usize {
        self.word_len
    }

    pub fn codewords(&self) -> &[MixedRadixWord] {
        &self.codewords
    }

    pub fn inner(&self) -> Option<&Codebook> {
        self.inner.as_deref()
    }

    /// Whether any level's codewords were truncated at the digit budget.
    pub fn is_truncated(&self) -> bool {
        self.cut || self.inner.as_ref().is_some_and(|c| c.is_truncated())
    }

    /// Whether `word` lies between the smallest and largest codeword of
    /// `coalition`.
    pub fn is_feasible(&self, word: &MixedRadixWord, coalition: &[usize]) -> bool {
        let members = coalition.iter().map(|&i| &self.codewords[i]);
        match (members.clone().min(), members.max()) {
            (Some(lo), Some(hi)) => lo <= word && word <= hi,
            _ => false,
        }
    }

    /// Traces a pirate word. Words outside the span of all codewords are
    /// infeasible for every coalition and yield failure.
    pub fn trace(&self, word: &MixedRadixWord) -> Result<TraceOutcome> {
        self.check_shape(word)?;
        let everyone: Vec<usize> = (0..self.users).collect();
        if !self.is_feasible(word, &everyone) {
            return Ok(TraceOutcome { accused: None });
        }
        Ok(TraceOutcome { accused: Some(self.trace_level(word)) })
    }

    fn check_shape(&self, word: &MixedRadixWord) -> Result<()> {
        if word.len() != self.word_len || (self.word_len > 0 && word.radix() != self.radix) {
            return Err(Error::Shape(format!(
                "expected {} digits in radix {}, got {} digits in radix {}",
                self.word_len,
                self.radix,
                word.len(),
                word.radix()
            )));
        }
        Ok(())
    }

    fn trace_level(&self, word: &MixedRadixWord) -> usize {
        let Some(inner) = &self.inner else {
            return 0;
        };
        let last = self.users - 1;
        let anchor = &self.codewords[last];
        let most = self.codewords[..last].iter().map(|c| c.common_prefix_len(anchor)).max().unwrap_or(0);
        let agree = word.common_prefix_len(anchor);
        if agree > most {
            return last;
        }
        // A full-length agreement is one past the nested domain; clamp it.
        let agree = if self.cut { agree } else { agree.min(self.word_len.saturating_sub(1)) };
        inner.trace_level(&MixedRadixWord::from_count(agree, inner.word_len, inner.radix))
    }
}

/// Generates a codebook for `users` users.
pub fn fpc_gen(users: usize, params: &FpcParams, rng: &mut RandomSource) -> Result<Codebook> {
    if users == 0 {
        return Err(Error::Parameter("a code needs at least one user".into()));
    }
    if users == 1 {
        return Ok(Codebook {
            users,
            radix: 2,
            word_len: 0,
            cut: false,
            codewords: vec![MixedRadixWord::zeros(0, 2)],
            inner: None,
        });
    }
    let inner = fpc_gen(users - 1, params, rng)?;
    let radix = params.radix(users - 1);
    let (word_len, cut) = capped_len(params.size(users - 1).ok(), params.digit_budget);
    let anchor = MixedRadixWord::random(word_len, radix, rng);
    let mut codewords: Vec<MixedRadixWord> = inner
        .codewords
        .iter()
        .map(|x| MixedRadixWord::agreeing_with(&anchor, x.value_capped(word_len), rng))
        .collect();
    codewords.push(anchor);
    Ok(Codebook { users, radix, word_len, cut, codewords, inner: Some(Box::new(inner)) })
}

/// Strategies a coalition may use to combine its codewords.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pirate {
    Min,
    Max,
    /// Lower median of the coalition's codewords.
    Median,
    RandomMember,
    /// Average of the smallest and largest codeword, rounded down.
    Midpoint,
    /// Digit-by-digit lower median. Not always feasible.
    CoordinateMedian,
}

impl Pirate {
    pub const FEASIBLE: [Pirate; 5] = [Pirate::Min, Pirate::Max, Pirate::Median, Pirate::RandomMember, Pirate::Midpoint];

    pub fn name(&self) -> &'static str {
        match self {
            Pirate::Min => "min",
            Pirate::Max => "max",
            Pirate::Median => "median",
            Pirate::RandomMember => "random",
            Pirate::Midpoint => "midpoint",
            Pirate::CoordinateMedian => "coordinate_median",
        }
    }

    pub fn parse(name: &str) -> Result<Pirate> {
        [Pirate::CoordinateMedian]
            .iter()
            .chain(Pirate::FEASIBLE.iter())
            .find(|p| p.name() == name)
            .copied()
            .ok_or_else(|| Error::Config(format!("unknown pirate strategy {name:?}")))
    }

    pub fn combine(&self, words: &[MixedRadixWord], rng: &mut RandomSource) -> Result<MixedRadixWord> {
        let first = words.first().ok_or(Error::EmptyCandidates)?;
        if words.iter().any(|w| !w.same_shape(first)) {
            return Err(Error::Shape("coalition codewords differ in shape".into()));
        }
        let mut sorted: Vec<&MixedRadixWord> = words.iter().collect();
        sorted.sort();
        Ok(match self {
            Pirate::Min => sorted[0].clone(),
            Pirate::Max => sorted[sorted.len() - 1].clone(),
            Pirate::Median => sorted[(sorted.len() - 1) / 2].clone(),
            Pirate::RandomMember => (*words.choose(rng).unwrap()).clone(),
            Pirate::Midpoint => {
                let mid = (sorted[0].to_biguint() + sorted[sorted.len() - 1].to_biguint()) >> 1u32;
                MixedRadixWord::from_value(&mid, first.len(), first.radix())
            }
            Pirate::CoordinateMedian => {
                let digits = (0..first.len())
                    .map(|j| {
                        let mut column: Vec<u64> = words.iter().map(|w| w.digits()[j]).collect();
                        column.sort_unstable();
                        column[(column.len() - 1) / 2]
                    })
                    .collect();
                MixedRadixWord::new(digits, first.radix())?
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> FpcParams {
        FpcParams::new(0.05).unwrap()
    }

    #[test]
    fn sizes_at_default_soundness() {
        let p = params();
        assert_eq!(p.radix(1), 40);
        assert_eq!(p.radix(2), 160);
        assert_eq!(p.size(1).unwrap(), BigUint::from(1u32));
        assert_eq!(p.size(2).unwrap(), BigUint::from(40u32));
        assert!(p.soundness_error(3) < 0.05);
    }

    #[test]
    fn shapes_of_small_codes() {
        let p = params();
        let mut rng = RandomSource::seed_from_u64(1);
        let one = fpc_gen(1, &p, &mut rng).unwrap();
        assert_eq!(one.word_len(), 0);
        assert_eq!(one.trace(&one.codewords()[0]).unwrap().accused, Some(0));
        let two = fpc_gen(2, &p, &mut rng).unwrap();
        assert_eq!((two.word_len(), two.radix()), (1, 40));
        let three = fpc_gen(3, &p, &mut rng).unwrap();
        assert_eq!((three.word_len(), three.radix()), (40, 160));
        assert!(!three.is_truncated());
        let four = fpc_gen(4, &p, &mut rng).unwrap();
        assert!(four.is_truncated());
    }

    #[test]
    fn codewords_rarely_trace_to_someone_else() {
        let p = params();
        let mut wrong = 0;
        for seed in 0..300 {
            let mut rng = RandomSource::seed_from_u64(seed);
            let book = fpc_gen(3, &p, &mut rng).unwrap();
            for (i, c) in book.codewords().iter().enumerate() {
                let accused = book.trace(c).unwrap().accused.expect("own codeword is feasible");
                if accused != i && book.codewords()[accused] != *c {
                    wrong += 1;
                }
            }
        }
        // Each single-user coalition is misattributed with probability below xi.
        assert!(wrong < 45, "{wrong} of 900 codewords traced elsewhere");
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let book = fpc_gen(3, &params(), &mut RandomSource::seed_from_u64(0)).unwrap();
        assert!(book.trace(&MixedRadixWord::zeros(5, 160)).is_err());
    }

    #[test]
    fn words_outside_all_codewords_fail_to_trace() {
        let book = fpc_gen(3, &params(), &mut RandomSource::seed_from_u64(9)).unwrap();
        let below = MixedRadixWord::zeros(40, 160);
        if below < *book.codewords().iter().min().unwrap() {
            assert_eq!(book.trace(&below).unwrap().accused, None);
        }
    }

    #[test]
    fn pirate_names_round_trip() {
        for p in Pirate::FEASIBLE.iter().chain([Pirate::CoordinateMedian].iter()) {
            assert_eq!(Pirate::parse(p.name()).unwrap(), *p);
        }
        assert!(Pirate::parse("mode").is_err());
    }
}
