//! Monotone step functions over a domain: released threshold answers and
//! learned cumulative distribution functions.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::domain::{Dataset, Element, OrderedDomain};
use crate::error::{Error, Result};

/// `value(t)` is the value at the largest breakpoint `<= t`, and 0 before
/// the first breakpoint.
#[derive(Clone, Debug, PartialEq)]
pub struct StepCdf<E = u64> {
    domain: OrderedDomain,
    breakpoints: Vec<E>,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct CsvRow {
    threshold: String,
    answer: f64,
}

impl<E: Element> StepCdf<E> {
    pub fn new(domain: OrderedDomain, breakpoints: Vec<E>, values: Vec<f64>) -> Result<Self> {
        if breakpoints.len() != values.len() {
            return Err(Error::Shape(format!(
                "{} breakpoints but {} values",
                breakpoints.len(),
                values.len()
            )));
        }
        for b in &breakpoints {
            domain.check(b)?;
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Shape("breakpoints must be strictly increasing".into()));
        }
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Shape("values must lie in [0, 1]".into()));
        }
        if values.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Shape("values must be non-decreasing".into()));
        }
        Ok(StepCdf { domain, breakpoints, values })
    }

    /// Clamps raw answers to `[0, 1]` and takes running maxima, then builds the
    /// step function. Pure post-processing of the answers.
    pub fn from_raw_answers(domain: OrderedDomain, breakpoints: Vec<E>, answers: &[f64]) -> Result<Self> {
        StepCdf::new(domain, breakpoints, monotone_clamp(answers))
    }

    /// The empirical CDF `t -> #{x_i <= t} / n`.
    pub fn empirical(data: &Dataset<E>) -> Self {
        let sorted = data.sorted_rows();
        Self::empirical_sorted(*data.domain(), &sorted)
    }

    pub(crate) fn empirical_sorted(domain: OrderedDomain, sorted: &[E]) -> Self {
        let n = sorted.len() as f64;
        let mut breakpoints = Vec::new();
        let mut values = Vec::new();
        for (i, x) in sorted.iter().enumerate() {
            if i + 1 == sorted.len() || sorted[i + 1] != *x {
                breakpoints.push(x.clone());
                values.push((i + 1) as f64 / n);
            }
        }
        StepCdf { domain, breakpoints, values }
    }

    pub fn domain(&self) -> &OrderedDomain {
        &self.domain
    }

    pub fn breakpoints(&self) -> &[E] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value_at(&self, t: &E) -> f64 {
        match self.breakpoints.partition_point(|b| b <= t) {
            0 => 0.0,
            i => self.values[i - 1],
        }
    }

    /// Supremum over all thresholds of `|self(t) - other(t)|`.
    pub fn max_abs_difference(&self, other: &StepCdf<E>) -> f64 {
        self.breakpoints
            .iter()
            .chain(other.breakpoints.iter())
            .map(|t| (self.value_at(t) - other.value_at(t)).abs())
            .fold(0.0, f64::max)
    }

    /// Whether this is a valid distribution function (value 1 at `max X`).
    pub fn is_distribution(&self) -> bool {
        (self.value_at(&self.domain.max_element()) - 1.0).abs() < 1e-12
    }

    /// Closest-in-shape valid CDF: clamped, monotone, and equal to 1 at `max X`.
    pub fn project_to_distribution(&self) -> StepCdf<E> {
        let mut breakpoints = self.breakpoints.clone();
        let mut values = monotone_clamp(&self.values);
        let top: E = self.domain.max_element();
        if breakpoints.last() == Some(&top) {
            *values.last_mut().unwrap() = 1.0;
        } else {
            breakpoints.push(top);
            values.push(1.0);
        }
        StepCdf { domain: self.domain, breakpoints, values }
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for (t, a) in self.breakpoints.iter().zip(&self.values) {
            w.serialize(CsvRow { threshold: t.to_string(), answer: *a })?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(domain: OrderedDomain, reader: R) -> Result<Self> {
        let mut breakpoints = Vec::new();
        let mut values = Vec::new();
        for row in csv::Reader::from_reader(reader).deserialize() {
            let row: CsvRow = row?;
            breakpoints.push(domain.parse_element(&row.threshold)?);
            values.push(row.answer);
        }
        StepCdf::new(domain, breakpoints, values)
    }
}

pub(crate) fn monotone_clamp(answers: &[f64]) -> Vec<f64> {
    let mut running = 0.0f64;
    answers
        .iter()
        .map(|a| {
            running = running.max(a.clamp(0.0, 1.0));
            running
        })
        .collect()
}
