//! Hardness and inaccessible-entropy notions as exact functionals.
//!
//! Each notion returns a [`NotionValue`]: the expectation form, the per-block
//! terms where the notion is a sum over blocks, and the full per-sample
//! decomposition under the generator-side distribution. The δ-quantile form
//! of any notion is the quantile of its sample decomposition.

mod offline;
mod online;

use std::fmt;
use std::str::FromStr;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

pub use offline::{hardness_re, hardness_re_extended, relative_pseudoentropy, witness_hardness_re, witness_hardness_re_extended};
pub use online::{inaccessible_entropy, nb_hardness_re, nb_inaccessible_re, nb_inaccessible_re_profiled, TargetProfile};

use crate::error::Error;
use crate::genkit::{BlockGenerator, OnlineGenerator};
use crate::probkit::{mass_at_most, quantile, to_f64, Prob, SampleRow};
use crate::simkit::{OnlineSimulator, Simulator};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Notion {
    HardnessRe,
    WitnessHardnessRe,
    RelativePseudoentropy,
    NbHardnessRe,
    NbInaccessibleRe,
    InaccessibleEntropy,
}

impl Notion {
    pub const ALL: [Notion; 6] = [
        Notion::HardnessRe,
        Notion::WitnessHardnessRe,
        Notion::RelativePseudoentropy,
        Notion::NbHardnessRe,
        Notion::NbInaccessibleRe,
        Notion::InaccessibleEntropy,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Notion::HardnessRe => "hardness-re",
            Notion::WitnessHardnessRe => "witness-hardness-re",
            Notion::RelativePseudoentropy => "relative-pseudoentropy",
            Notion::NbHardnessRe => "nb-hardness-re",
            Notion::NbInaccessibleRe => "nb-inaccessible-re",
            Notion::InaccessibleEntropy => "inaccessible-entropy",
        }
    }

    /// Notions of a two-block pair on a search problem, as opposed to the
    /// next-block notions of an online generator.
    pub fn is_offline(&self) -> bool {
        matches!(self, Notion::HardnessRe | Notion::WitnessHardnessRe | Notion::RelativePseudoentropy)
    }
}

impl fmt::Display for Notion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Notion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Notion::ALL
            .into_iter()
            .find(|n| n.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown notion {s:?}")))
    }
}

/// Size accounting attached to every computed value. Time is never enforced;
/// these counters stand in for it.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Cost {
    /// Seed paths of the generator enumerated.
    pub seed_paths: u64,
    /// Entries in the generator tables.
    pub table_entries: u64,
    /// Support points of the target / simulator-side joint.
    pub target_points: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NotionValue {
    pub notion: Notion,
    pub expectation: f64,
    /// Per-block terms (empty for single-shot notions).
    pub terms: Vec<f64>,
    pub samples: Vec<SampleRow>,
    pub delta_quantile: Option<(Prob, f64)>,
    pub cost: Cost,
}

impl NotionValue {
    /// Probability-weighted mean of the sample decomposition.
    pub fn sample_mean(&self) -> f64 {
        self.samples.iter().map(|r| to_f64(&r.prob) * r.value.value).sum()
    }

    pub fn quantile(&self, delta: &Prob) -> f64 {
        quantile(self.samples.iter().map(|r| (&r.prob, &r.value)), delta)
    }

    pub fn with_delta(mut self, delta: Prob) -> Self {
        let q = self.quantile(&delta);
        self.delta_quantile = Some((delta, q));
        self
    }

    pub fn max_sample(&self) -> f64 {
        self.samples.iter().map(|r| r.value.value).fold(f64::NEG_INFINITY, f64::max)
    }

    /// `Pr[sample ≤ threshold]`.
    pub fn mass_at_most(&self, threshold: f64) -> Prob {
        mass_at_most(self.samples.iter().map(|r| (&r.prob, &r.value)), threshold)
    }

    /// Markov's inequality on the positive part of the samples:
    /// `Pr[sample ≥ E[max(sample, 0)]/δ] ≤ δ`.
    pub fn markov_holds(&self, delta: &Prob) -> bool {
        if delta.is_zero() {
            return true;
        }
        let positive: f64 = self.samples.iter().map(|r| to_f64(&r.prob) * r.value.value.max(0.0)).sum();
        let threshold = positive / to_f64(delta);
        let tail: f64 = self
            .samples
            .iter()
            .filter(|r| r.value.value >= threshold && r.value.value > 0.0)
            .map(|r| to_f64(&r.prob))
            .sum();
        tail <= to_f64(delta) + crate::TOLERANCE
    }
}

/// A two-block generator with an offline simulator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdversaryPair {
    pub generator: BlockGenerator,
    pub simulator: Simulator,
}

/// An online generator with an online simulator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OnlinePair {
    pub generator: OnlineGenerator,
    pub simulator: OnlineSimulator,
}
