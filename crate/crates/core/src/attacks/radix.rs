use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{Element, OrderedDomain, WideElement};
use crate::error::{Error, Result};
use crate::rng::RandomSource;

/// A fixed-length base-`radix` number, most significant digit first.
///
/// Words of equal length and radix compare numerically, which for digit
/// vectors is the lexicographic order.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MixedRadixWord {
    digits: Vec<u64>,
    radix: u64,
}

impl MixedRadixWord {
    pub fn new(digits: Vec<u64>, radix: u64) -> Result<Self> {
        if radix < 2 {
            return Err(Error::Parameter(format!("radix must be at least 2, got {radix}")));
        }
        if let Some(d) = digits.iter().find(|&&d| d >= radix) {
            return Err(Error::Shape(format!("digit {d} out of range for radix {radix}")));
        }
        Ok(MixedRadixWord { digits, radix })
    }

    pub fn zeros(len: usize, radix: u64) -> Self {
        MixedRadixWord { digits: vec![0; len], radix }
    }

    pub fn max_word(len: usize, radix: u64) -> Self {
        MixedRadixWord { digits: vec![radix - 1; len], radix }
    }

    pub fn random(len: usize, radix: u64, rng: &mut RandomSource) -> Self {
        MixedRadixWord { digits: (0..len).map(|_| rng.random_range(0..radix)).collect(), radix }
    }

    /// Copies the first `keep` digits of `base` and draws the rest uniformly.
    pub fn agreeing_with(base: &MixedRadixWord, keep: usize, rng: &mut RandomSource) -> Self {
        let keep = keep.min(base.len());
        let mut digits = base.digits[..keep].to_vec();
        digits.extend((keep..base.len()).map(|_| rng.random_range(0..base.radix)));
        MixedRadixWord { digits, radix: base.radix }
    }

    /// `value` written in `len` digits, saturating at the largest word.
    pub fn from_value(value: &BigUint, len: usize, radix: u64) -> Self {
        let mut digits = vec![0; len];
        let mut rest = value.clone();
        let b = BigUint::from(radix);
        for slot in digits.iter_mut().rev() {
            if rest.is_zero() {
                break;
            }
            *slot = (&rest % &b).to_u64().unwrap();
            rest /= &b;
        }
        if !rest.is_zero() {
            return Self::max_word(len, radix);
        }
        MixedRadixWord { digits, radix }
    }

    pub fn from_count(value: usize, len: usize, radix: u64) -> Self {
        Self::from_value(&BigUint::from(value), len, radix)
    }

    pub fn digits(&self) -> &[u64] {
        &self.digits
    }

    pub fn radix(&self) -> u64 {
        self.radix
    }

    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }

    pub fn same_shape(&self, other: &MixedRadixWord) -> bool {
        self.radix == other.radix && self.len() == other.len()
    }

    /// Number of leading digits shared with `other`.
    pub fn common_prefix_len(&self, other: &MixedRadixWord) -> usize {
        self.digits.iter().zip(&other.digits).take_while(|(a, b)| a == b).count()
    }

    pub fn to_biguint(&self) -> BigUint {
        let b = BigUint::from(self.radix);
        self.digits.iter().fold(BigUint::zero(), |acc, &d| acc * &b + d)
    }

    /// `min(value, cap)`, computed without materializing large values.
    pub fn value_capped(&self, cap: usize) -> usize {
        let mut v: u128 = 0;
        for &d in &self.digits {
            v = v * self.radix as u128 + d as u128;
            if v > cap as u128 {
                return cap;
            }
        }
        v as usize
    }
}

/// Bits used per digit in the radix-2 view: `ceil(log2 radix)`.
pub fn bits_per_digit(radix: u64) -> u32 {
    64 - (radix - 1).leading_zeros()
}

/// Domain of the radix-2 view of words with `len` digits.
pub fn bit_domain(len: usize, radix: u64) -> Result<OrderedDomain> {
    OrderedDomain::new((len as u32).saturating_mul(bits_per_digit(radix)).max(1))
}

impl MixedRadixWord {
    /// Radix-2 view: each digit expanded to `ceil(log2 radix)` bits. The map is
    /// order preserving.
    pub fn to_element(&self) -> WideElement {
        let bits = bits_per_digit(self.radix);
        let width = (self.len() as u32 * bits).max(1);
        let value = self.digits.iter().fold(BigUint::zero(), |acc, &d| (acc << bits) + d);
        WideElement::from_biguint(&value, width).expect("digits fit their bit fields")
    }

    /// Largest word whose radix-2 view is at most `element`. Interior points
    /// of a set of views map to interior points of the words.
    pub fn from_element(element: &WideElement, len: usize, radix: u64) -> Self {
        let bits = bits_per_digit(radix);
        let width = (len as u32 * bits).max(1);
        let mut digits = Vec::with_capacity(len);
        let mut saturated = false;
        for i in 0..len as u32 {
            if saturated {
                digits.push(radix - 1);
                continue;
            }
            let mut d = 0u64;
            for j in 0..bits {
                d = (d << 1) | element.bit(i * bits + j, width) as u64;
            }
            if d >= radix {
                saturated = true;
                d = radix - 1;
            }
            digits.push(d);
        }
        MixedRadixWord { digits, radix }
    }
}
