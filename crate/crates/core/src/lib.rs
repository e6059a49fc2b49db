//! Differentially private interior points over ordered domains, and what they
//! buy: threshold-query release, distribution learning and proper threshold
//! learning. Also included are lower-bound attack simulations (fingerprinting
//! codes over mixed-radix words) and Monte-Carlo privacy audits.
//!
//! Elements are fixed-width bit strings ([`u64`] or [`WideElement`]) ordered
//! as integers. Every randomized routine takes a [`RandomSource`], so a seed
//! reproduces a run exactly.

pub mod attacks;
pub mod audit;
pub mod bench;
pub mod cdf;
pub mod domain;
pub mod error;
pub mod interior_point;
pub mod io;
pub mod learning;
pub mod mechanisms;
pub mod release;
pub mod rng;
pub mod stats;

pub use cdf::StepCdf;
pub use domain::{Dataset, Element, LabeledDataset, OrderedDomain, Prefix, WideElement};
pub use error::{Error, Result};
pub use mechanisms::PrivacyBudget;
pub use rng::RandomSource;
