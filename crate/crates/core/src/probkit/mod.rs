//! Exact finite distributions and information measures.
//!
//! All logarithms are base 2, so every entropy and divergence is in bits.
//! `0 · log(0/q)` terms never appear because only supports are enumerated;
//! a positive mass against a zero mass is a [`SupportViolation`](crate::Error::SupportViolation).

mod block;
mod dist;
mod logs;
mod measures;

pub use block::{outcome, outcome_to_string, Block, Outcome, MAX_BLOCK_WIDTH};
pub use dist::{pow2_inv, ratio, FiniteDist};
pub use logs::{log2_ratio, SampleValue};
pub use measures::{
    cond_entropy, cond_entropy_samples, cond_rel_entropy, cond_rel_entropy_samples, dp_check, entropy,
    mass_at_most, min_rel_entropy, quantile, quantile_sample, rel_entropy, rel_entropy_samples, rel_entropy_samples_extended,
    sample_entropy, sample_rel_entropy, CondQuery, SampleRow,
};

/// Exact probability.
pub type Prob = num_rational::BigRational;

/// Global comparison tolerance for values obtained after `log2` evaluation.
pub const TOLERANCE: f64 = 1e-9;

/// `Prob` to `f64` (probabilities are always representable to full precision).
pub fn to_f64(p: &Prob) -> f64 {
    num_traits::ToPrimitive::to_f64(p).expect("finite rational")
}
