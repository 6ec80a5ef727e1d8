use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use super::block::{outcome_to_string, Block, Outcome};
use super::Prob;
use crate::error::{Error, Result};

/// Exact probability mass function over tuples of fixed-width blocks.
///
/// Entries are kept sorted by outcome with strictly positive mass, so the
/// support is exactly the set of stored outcomes. Masses sum to exactly one.
/// Any block may be ⊥ regardless of its declared width.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteDist {
    widths: Vec<u8>,
    entries: Vec<(Outcome, Prob)>,
}

pub fn ratio(n: u64, d: u64) -> Prob {
    Prob::new(BigInt::from(n), BigInt::from(d))
}

/// `2^{-k}` exactly.
pub fn pow2_inv(k: u32) -> Prob {
    Prob::new(BigInt::one(), BigInt::one() << k)
}

impl FiniteDist {
    /// Build from (possibly repeated, possibly zero-mass) entries.
    pub fn new(widths: Vec<u8>, entries: impl IntoIterator<Item = (Outcome, Prob)>) -> Result<Self> {
        let dist = Self::accumulate(widths, entries)?;
        let total: Prob = dist.entries.iter().map(|(_, p)| p).sum();
        if !total.is_one() {
            return Err(Error::InvalidDistribution(format!("masses sum to {total}, not 1")));
        }
        Ok(dist)
    }

    fn accumulate(widths: Vec<u8>, entries: impl IntoIterator<Item = (Outcome, Prob)>) -> Result<Self> {
        let mut acc: BTreeMap<Outcome, Prob> = BTreeMap::new();
        for (o, p) in entries {
            if o.len() != widths.len() {
                return Err(Error::WidthMismatch(format!(
                    "outcome {} has arity {}, expected {}",
                    outcome_to_string(&o),
                    o.len(),
                    widths.len()
                )));
            }
            if let Some((i, b)) = o.iter().enumerate().find(|(i, b)| !b.fits(widths[*i])) {
                return Err(Error::WidthMismatch(format!(
                    "block {i} of {} is {} bits wide, expected {}",
                    outcome_to_string(&o),
                    b.width(),
                    widths[i]
                )));
            }
            if p.is_negative() {
                return Err(Error::InvalidDistribution(format!(
                    "negative mass {p} on {}",
                    outcome_to_string(&o)
                )));
            }
            *acc.entry(o).or_insert_with(Prob::zero) += p;
        }
        let entries = acc.into_iter().filter(|(_, p)| !p.is_zero()).collect();
        Ok(FiniteDist { widths, entries })
    }

    /// Normalise nonnegative integer weights.
    pub fn from_weights(widths: Vec<u8>, weights: impl IntoIterator<Item = (Outcome, u64)>) -> Result<Self> {
        let weights: Vec<(Outcome, u64)> = weights.into_iter().collect();
        let total: u64 = weights.iter().map(|(_, w)| *w).sum();
        if total == 0 {
            return Err(Error::InvalidDistribution("all weights are zero".into()));
        }
        Self::new(widths, weights.into_iter().map(|(o, w)| (o, ratio(w, total))))
    }

    /// Uniform over all outcomes of the given block widths.
    pub fn uniform(widths: Vec<u8>) -> Self {
        let total: u32 = widths.iter().map(|&w| w as u32).sum();
        assert!(total <= 24, "uniform distribution over 2^{total} outcomes is too large");
        let p = pow2_inv(total);
        let mut entries = Vec::with_capacity(1 << total);
        for v in 0..(1u64 << total) {
            let joined = Block::new(v, total as u8);
            entries.push((joined.split(&widths).expect("widths sum"), p.clone()));
        }
        FiniteDist { widths, entries }
    }

    /// Uniform over the given (distinct) outcomes.
    pub fn uniform_over(widths: Vec<u8>, outcomes: impl IntoIterator<Item = Outcome>) -> Result<Self> {
        Self::from_weights(widths, outcomes.into_iter().map(|o| (o, 1)))
    }

    pub fn point(widths: Vec<u8>, outcome: Outcome) -> Result<Self> {
        Self::new(widths, [(outcome, Prob::one())])
    }

    /// One-bit Bernoulli with `Pr["1"] = p`.
    pub fn bernoulli(p: Prob) -> Result<Self> {
        if p.is_negative() || p > Prob::one() {
            return Err(Error::InvalidDistribution(format!("Bernoulli parameter {p}")));
        }
        Self::new(
            vec![1],
            [(vec![Block::new(0, 1)], Prob::one() - &p), (vec![Block::new(1, 1)], p)],
        )
    }

    /// Product distribution with `self` in the leading positions.
    pub fn product(&self, other: &FiniteDist) -> FiniteDist {
        let mut widths = self.widths.clone();
        widths.extend_from_slice(&other.widths);
        let mut entries = Vec::with_capacity(self.entries.len() * other.entries.len());
        for (a, pa) in &self.entries {
            for (b, pb) in &other.entries {
                let mut o = a.clone();
                o.extend_from_slice(b);
                entries.push((o, pa * pb));
            }
        }
        entries.sort_by(|x, y| x.0.cmp(&y.0));
        FiniteDist { widths, entries }
    }

    pub fn arity(&self) -> usize {
        self.widths.len()
    }

    pub fn widths(&self) -> &[u8] {
        &self.widths
    }

    pub fn entries(&self) -> &[(Outcome, Prob)] {
        &self.entries
    }

    pub fn support(&self) -> impl Iterator<Item = &Outcome> {
        self.entries.iter().map(|(o, _)| o)
    }

    pub fn support_size(&self) -> usize {
        self.entries.len()
    }

    pub fn prob(&self, outcome: &[Block]) -> Prob {
        match self.entries.binary_search_by(|(o, _)| o.as_slice().cmp(outcome)) {
            Ok(i) => self.entries[i].1.clone(),
            Err(_) => Prob::zero(),
        }
    }

    pub fn prob_ref(&self, outcome: &[Block]) -> Option<&Prob> {
        self.entries
            .binary_search_by(|(o, _)| o.as_slice().cmp(outcome))
            .ok()
            .map(|i| &self.entries[i].1)
    }

    pub fn contains(&self, outcome: &[Block]) -> bool {
        self.prob_ref(outcome).is_some()
    }

    /// Marginal on `positions`, in the order given.
    pub fn marginal(&self, positions: &[usize]) -> FiniteDist {
        assert!(positions.iter().all(|&p| p < self.arity()), "position out of range");
        let widths = positions.iter().map(|&p| self.widths[p]).collect();
        self.pushforward(widths, |o| positions.iter().map(|&p| o[p]).collect())
            .expect("projection preserves widths")
    }

    /// Distribution of `f(X)` for `X ~ self`.
    pub fn pushforward(&self, widths: Vec<u8>, f: impl Fn(&Outcome) -> Outcome) -> Result<FiniteDist> {
        Self::accumulate(widths, self.entries.iter().map(|(o, p)| (f(o), p.clone())))
    }

    /// Uniform on its support, compared exactly.
    pub fn is_flat(&self) -> bool {
        let first = &self.entries[0].1;
        self.entries.iter().all(|(_, p)| p == first)
    }

    /// `Supp(self) ⊆ Supp(other)`.
    pub fn support_within(&self, other: &FiniteDist) -> bool {
        self.support().all(|o| other.contains(o))
    }

    pub fn contains_bottom(&self) -> bool {
        self.support().any(|o| o.iter().any(Block::is_bottom))
    }
}
