//! Constructive lower-bound machinery: the hard database distribution, the
//! interior point fingerprinting code, and coalition attacks on mechanisms.

pub mod attack;
pub mod fpc;
pub mod hard_dist;
pub mod radix;

pub use attack::{attack_mechanism, AttackConfig, AttackReport, WordMechanism};
pub use fpc::{fpc_gen, Codebook, FpcParams, Pirate, TraceOutcome};
pub use hard_dist::{hard_dist_sample, HardDatabase, HardDistParams};
pub use radix::MixedRadixWord;
