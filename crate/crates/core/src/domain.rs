//! Finite totally ordered domains of fixed-width bit strings.
//!
//! A domain of width `d` holds the integers `[0, 2^d)` in numeric order. Rows
//! narrower than a machine word are plain `u64`s; wider domains use
//! [`WideElement`], a big-endian limb vector whose derived ordering coincides
//! with numeric order for a fixed width.

use std::fmt;
use std::hash::Hash;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest universe handled directly by the base case of the recursive solver.
pub const DEFAULT_BASE_CASE_THRESHOLD: u64 = 32;

/// Bit-string operations needed by the prefix-based algorithms.
///
/// Bit index 0 is the most significant bit of the `width`-bit representation.
pub trait Element: Clone + Ord + Hash + fmt::Debug + fmt::Display + Send + Sync + 'static {
    /// `value` must fit in `width` bits.
    fn from_u64(value: u64, width: u32) -> Self;
    fn max_value(width: u32) -> Self;
    fn fits(&self, width: u32) -> bool;
    fn bit(&self, index: u32, width: u32) -> bool;
    fn common_prefix_len(&self, other: &Self, width: u32) -> u32;
    /// Keeps the leading `keep` bits and sets every later bit to `fill`.
    fn with_suffix(&self, keep: u32, fill: bool, width: u32) -> Self;
    fn with_bit(&self, index: u32, value: bool, width: u32) -> Self;
    fn to_biguint(&self) -> BigUint;
    fn from_biguint(value: &BigUint, width: u32) -> Option<Self>;
    fn to_u64(&self) -> Option<u64>;

    fn sort_rows(rows: &mut [Self], _width: u32) {
        rows.sort_unstable();
    }
}

#[inline]
fn low_mask(bits: u32) -> u64 {
    if bits >= 64 {
        u64::MAX
    } else {
        (1u64 << bits) - 1
    }
}

impl Element for u64 {
    fn from_u64(value: u64, width: u32) -> Self {
        debug_assert!(value.fits(width));
        value
    }

    fn max_value(width: u32) -> Self {
        low_mask(width)
    }

    fn fits(&self, width: u32) -> bool {
        width >= 64 || *self >> width == 0
    }

    fn bit(&self, index: u32, width: u32) -> bool {
        (*self >> (width - 1 - index)) & 1 == 1
    }

    fn common_prefix_len(&self, other: &Self, width: u32) -> u32 {
        let diff = *self ^ *other;
        if diff == 0 {
            width
        } else {
            let highest = 63 - diff.leading_zeros();
            width - 1 - highest
        }
    }

    fn with_suffix(&self, keep: u32, fill: bool, width: u32) -> Self {
        let mask = low_mask(width - keep);
        if fill {
            *self | mask
        } else {
            *self & !mask
        }
    }

    fn with_bit(&self, index: u32, value: bool, width: u32) -> Self {
        let mask = 1u64 << (width - 1 - index);
        if value {
            *self | mask
        } else {
            *self & !mask
        }
    }

    fn to_biguint(&self) -> BigUint {
        BigUint::from(*self)
    }

    fn from_biguint(value: &BigUint, width: u32) -> Option<Self> {
        value.to_u64().filter(|v| v.fits(width))
    }

    fn to_u64(&self) -> Option<u64> {
        Some(*self)
    }

    fn sort_rows(rows: &mut [Self], width: u32) {
        // Counting sort pays off once the histogram is small next to the input.
        if width <= 24 && rows.len() >= (1usize << width) / 4 && rows.len() > 4096 {
            let mut counts = vec![0usize; 1usize << width];
            for &r in rows.iter() {
                counts[r as usize] += 1;
            }
            let mut pos = 0;
            for (value, &c) in counts.iter().enumerate() {
                rows[pos..pos + c].fill(value as u64);
                pos += c;
            }
        } else {
            rows.sort_unstable();
        }
    }
}

/// An element of a domain wider than 64 bits.
///
/// Limbs are stored most significant first and the value is right-aligned,
/// so two elements of the same width compare numerically.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct WideElement {
    limbs: Box<[u64]>,
}

fn limb_count(width: u32) -> usize {
    width.div_ceil(64).max(1) as usize
}

fn top_bits(width: u32) -> u32 {
    width - 64 * (limb_count(width) as u32 - 1)
}

impl WideElement {
    pub fn limbs(&self) -> &[u64] {
        &self.limbs
    }

    fn position(&self, index: u32, width: u32) -> (usize, u32) {
        let from_lsb = width - 1 - index;
        let limb = self.limbs.len() - 1 - (from_lsb / 64) as usize;
        (limb, from_lsb % 64)
    }
}

impl fmt::Debug for WideElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "WideElement({self})")
    }
}

impl fmt::Display for WideElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "0x{}", self.to_biguint().to_str_radix(16))
    }
}

impl Element for WideElement {
    fn from_u64(value: u64, width: u32) -> Self {
        let mut limbs = vec![0u64; limb_count(width)].into_boxed_slice();
        *limbs.last_mut().unwrap() = value;
        WideElement { limbs }
    }

    fn max_value(width: u32) -> Self {
        let mut limbs = vec![u64::MAX; limb_count(width)].into_boxed_slice();
        limbs[0] = low_mask(top_bits(width));
        WideElement { limbs }
    }

    fn fits(&self, width: u32) -> bool {
        self.limbs.len() == limb_count(width) && self.limbs[0] & !low_mask(top_bits(width)) == 0
    }

    fn bit(&self, index: u32, width: u32) -> bool {
        let (limb, shift) = self.position(index, width);
        (self.limbs[limb] >> shift) & 1 == 1
    }

    fn common_prefix_len(&self, other: &Self, width: u32) -> u32 {
        let n = self.limbs.len();
        for (j, (a, b)) in self.limbs.iter().zip(other.limbs.iter()).enumerate() {
            let diff = a ^ b;
            if diff != 0 {
                let highest = (n - 1 - j) as u32 * 64 + 63 - diff.leading_zeros();
                return width - 1 - highest;
            }
        }
        width
    }

    fn with_suffix(&self, keep: u32, fill: bool, width: u32) -> Self {
        let low = width - keep;
        let n = self.limbs.len();
        let mut limbs = self.limbs.clone();
        for (j, limb) in limbs.iter_mut().enumerate() {
            let start = (n - 1 - j) as u32 * 64;
            if start >= low {
                continue;
            }
            let mask = low_mask(low - start);
            if fill {
                *limb |= mask;
            } else {
                *limb &= !mask;
            }
        }
        limbs[0] &= low_mask(top_bits(width));
        WideElement { limbs }
    }

    fn with_bit(&self, index: u32, value: bool, width: u32) -> Self {
        let (limb, shift) = self.position(index, width);
        let mut limbs = self.limbs.clone();
        if value {
            limbs[limb] |= 1 << shift;
        } else {
            limbs[limb] &= !(1 << shift);
        }
        WideElement { limbs }
    }

    fn to_biguint(&self) -> BigUint {
        let bytes: Vec<u8> = self.limbs.iter().flat_map(|l| l.to_be_bytes()).collect();
        BigUint::from_bytes_be(&bytes)
    }

    fn from_biguint(value: &BigUint, width: u32) -> Option<Self> {
        let n = limb_count(width);
        let digits = value.to_u64_digits();
        if digits.len() > n {
            return None;
        }
        let mut limbs = vec![0u64; n].into_boxed_slice();
        for (i, d) in digits.iter().enumerate() {
            limbs[n - 1 - i] = *d;
        }
        let e = WideElement { limbs };
        e.fits(width).then_some(e)
    }

    fn to_u64(&self) -> Option<u64> {
        self.limbs[..self.limbs.len() - 1]
            .iter()
            .all(|&l| l == 0)
            .then(|| *self.limbs.last().unwrap())
    }
}

/// The universe `[0, 2^bit_width)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OrderedDomain {
    bit_width: u32,
    base_case_threshold: u64,
}

impl OrderedDomain {
    pub fn new(bit_width: u32) -> Result<Self> {
        if bit_width == 0 {
            return Err(Error::Parameter("domain width must be at least 1 bit".into()));
        }
        Ok(OrderedDomain { bit_width, base_case_threshold: DEFAULT_BASE_CASE_THRESHOLD })
    }

    pub fn with_base_case_threshold(mut self, threshold: u64) -> Self {
        self.base_case_threshold = threshold.max(2);
        self
    }

    pub fn bit_width(&self) -> u32 {
        self.bit_width
    }

    pub fn base_case_threshold(&self) -> u64 {
        self.base_case_threshold
    }

    /// `|X|` when it fits in a `u128`.
    pub fn size(&self) -> Option<u128> {
        (self.bit_width < 128).then(|| 1u128 << self.bit_width)
    }

    pub fn is_base_case(&self) -> bool {
        self.bit_width < 64 && (1u64 << self.bit_width) <= self.base_case_threshold
    }

    /// Domain of common-prefix lengths: the integers `[0, d]` embedded in
    /// `ceil(log2(d + 1))` bits.
    pub fn child(&self) -> OrderedDomain {
        let values = self.bit_width as u64 + 1;
        let width = 64 - (values - 1).leading_zeros();
        OrderedDomain { bit_width: width, base_case_threshold: self.base_case_threshold }
    }

    /// Number of levels the recursive solver runs on this domain.
    pub fn recursion_depth(&self) -> u32 {
        let mut depth = 1;
        let mut domain = *self;
        while !domain.is_base_case() {
            domain = domain.child();
            depth += 1;
        }
        depth
    }

    pub fn min_element<E: Element>(&self) -> E {
        E::from_u64(0, self.bit_width)
    }

    pub fn max_element<E: Element>(&self) -> E {
        E::max_value(self.bit_width)
    }

    pub fn contains<E: Element>(&self, x: &E) -> bool {
        x.fits(self.bit_width)
    }

    pub fn check<E: Element>(&self, x: &E) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::DomainMismatch { value: x.to_string(), width: self.bit_width })
        }
    }

    /// Number of leading bits on which `x` and `y` agree.
    pub fn lcp_length<E: Element>(&self, x: &E, y: &E) -> Result<u32> {
        self.check(x)?;
        self.check(y)?;
        Ok(x.common_prefix_len(y, self.bit_width))
    }

    /// The prefix followed by `d - len` copies of `fill`.
    pub fn extend_prefix<E: Element>(&self, prefix: &Prefix<E>, fill: bool) -> Result<E> {
        if prefix.len > self.bit_width {
            return Err(Error::PrefixLength { len: prefix.len, width: self.bit_width });
        }
        self.check(&prefix.bits)?;
        Ok(prefix.bits.with_suffix(prefix.len, fill, self.bit_width))
    }

    /// Parses a decimal or `0x`-prefixed hexadecimal element.
    pub fn parse_element<E: Element>(&self, text: &str) -> Result<E> {
        let text = text.trim();
        let parsed = match text.strip_prefix("0x").or_else(|| text.strip_prefix("0X")) {
            Some(hex) => BigUint::parse_bytes(hex.as_bytes(), 16),
            None => BigUint::parse_bytes(text.as_bytes(), 10),
        };
        let value = parsed.ok_or_else(|| Error::Parameter(format!("not an unsigned integer: {text:?}")))?;
        E::from_biguint(&value, self.bit_width)
            .ok_or_else(|| Error::DomainMismatch { value: text.to_string(), width: self.bit_width })
    }
}

/// A bit string of length `len`, stored as an element whose remaining bits are zero.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Prefix<E> {
    len: u32,
    bits: E,
}

impl<E: Element> Prefix<E> {
    pub fn of(x: &E, len: u32, domain: &OrderedDomain) -> Result<Self> {
        if len > domain.bit_width {
            return Err(Error::PrefixLength { len, width: domain.bit_width });
        }
        domain.check(x)?;
        Ok(Prefix { len, bits: x.with_suffix(len, false, domain.bit_width) })
    }

    /// Parses a string of `0`/`1` characters, most significant first.
    pub fn from_bit_str(bits: &str, domain: &OrderedDomain) -> Result<Self> {
        let len = bits.len() as u32;
        if len > domain.bit_width {
            return Err(Error::PrefixLength { len, width: domain.bit_width });
        }
        let mut value: E = domain.min_element();
        for (i, c) in bits.chars().enumerate() {
            match c {
                '0' => {}
                '1' => value = value.with_bit(i as u32, true, domain.bit_width),
                other => return Err(Error::Parameter(format!("invalid bit {other:?} in prefix"))),
            }
        }
        Ok(Prefix { len, bits: value })
    }

    pub fn len(&self) -> u32 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn bits(&self) -> &E {
        &self.bits
    }
}

/// Iterated exponential: `tower(0, x) = x`, `tower(k, x) = 2^tower(k-1, x)`.
///
/// Fails once an exponent would exceed `bit_budget` bits of output.
pub fn tower(k: u32, x: &BigUint, bit_budget: u64) -> Result<BigUint> {
    let mut value = x.clone();
    for _ in 0..k {
        let exponent = value
            .to_u64()
            .filter(|&e| e <= bit_budget)
            .ok_or(Error::Overflow { budget: bit_budget })?;
        value = BigUint::one() << exponent;
    }
    Ok(value)
}

/// Multiset of rows from a domain. Row order carries no meaning.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dataset<E = u64> {
    domain: OrderedDomain,
    rows: Vec<E>,
}

impl<E: Element> Dataset<E> {
    pub fn new(domain: OrderedDomain, rows: Vec<E>) -> Result<Self> {
        for row in &rows {
            domain.check(row)?;
        }
        Ok(Dataset { domain, rows })
    }

    /// Skips per-row validation for rows already known to lie in `domain`.
    pub(crate) fn from_trusted(domain: OrderedDomain, rows: Vec<E>) -> Self {
        Dataset { domain, rows }
    }

    pub fn domain(&self) -> &OrderedDomain {
        &self.domain
    }

    pub fn rows(&self) -> &[E] {
        &self.rows
    }

    pub fn into_rows(self) -> Vec<E> {
        self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn min(&self) -> Option<&E> {
        self.rows.iter().min()
    }

    pub fn max(&self) -> Option<&E> {
        self.rows.iter().max()
    }

    pub fn sorted_rows(&self) -> Vec<E> {
        let mut rows = self.rows.clone();
        E::sort_rows(&mut rows, self.domain.bit_width);
        rows
    }

    /// Whether `min D <= x <= max D`; never true for an empty dataset.
    pub fn is_interior(&self, x: &E) -> bool {
        match (self.min(), self.max()) {
            (Some(lo), Some(hi)) => lo <= x && x <= hi,
            _ => false,
        }
    }

    pub fn count_at_least(&self, x: &E) -> usize {
        self.rows.iter().filter(|r| *r >= x).count()
    }

    pub fn count_at_most(&self, x: &E) -> usize {
        self.rows.iter().filter(|r| *r <= x).count()
    }
}

/// Rows paired with binary labels; `true` stands for label 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledDataset<E = u64> {
    domain: OrderedDomain,
    rows: Vec<(E, bool)>,
}

impl<E: Element> LabeledDataset<E> {
    pub fn new(domain: OrderedDomain, rows: Vec<(E, bool)>) -> Result<Self> {
        for (x, _) in &rows {
            domain.check(x)?;
        }
        Ok(LabeledDataset { domain, rows })
    }

    pub fn domain(&self) -> &OrderedDomain {
        &self.domain
    }

    pub fn rows(&self) -> &[(E, bool)] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn unlabeled(&self) -> Dataset<E> {
        Dataset { domain: self.domain, rows: self.rows.iter().map(|(x, _)| x.clone()).collect() }
    }
}

/// `2^bits` as a big integer, for domain-size bookkeeping.
pub fn pow2(bits: u64) -> BigUint {
    if bits == 0 {
        return BigUint::one();
    }
    BigUint::one() << bits
}
