use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Pow, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::simulator::OnlineSimulator;
use crate::error::{Error, Result};
use crate::genkit::OnlineGenerator;
use crate::probkit::{log2_ratio, ratio, Block, FiniteDist, Prob, SampleValue};

/// Attempt budget `T` of the rejection sampler. `Unbounded` is the analytic
/// `T → ∞` limit: it never fails on a reachable block.
///
/// Encoded as a bare integer or the string `"inf"`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Attempts {
    Finite(u64),
    Unbounded,
}

impl Serialize for Attempts {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Attempts::Finite(t) => s.serialize_u64(*t),
            Attempts::Unbounded => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Attempts {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(u64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(t) if t >= 1 => Ok(Attempts::Finite(t)),
            Raw::Num(_) => Err(serde::de::Error::custom("the attempt budget T must be at least 1")),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

impl fmt::Display for Attempts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Attempts::Finite(t) => write!(f, "{t}"),
            Attempts::Unbounded => write!(f, "inf"),
        }
    }
}

impl std::str::FromStr for Attempts {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inf" | "∞" | "unbounded" => Ok(Attempts::Unbounded),
            _ => match s.parse::<u64>() {
                Ok(t) if t >= 1 => Ok(Attempts::Finite(t)),
                _ => Err(Error::Parse(format!("attempt budget {s:?} is not a positive integer or inf"))),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RejectionConfig {
    pub target: OnlineGenerator,
    pub attempts: Attempts,
}

impl RejectionConfig {
    pub fn new(target: OnlineGenerator, attempts: Attempts) -> Result<Self> {
        if attempts == Attempts::Finite(0) {
            return Err(Error::Domain("the attempt budget T must be at least 1".into()));
        }
        Ok(RejectionConfig { target, attempts })
    }
}

/// `1 − (1 − k/L)^T`, or `[k > 0]` when unbounded.
pub fn success_probability(k: u64, l: u64, attempts: Attempts) -> Prob {
    if k == 0 {
        return Prob::zero();
    }
    match attempts {
        Attempts::Unbounded => Prob::one(),
        Attempts::Finite(t) => {
            let miss = Prob::new(BigInt::from(l - k), BigInt::from(l));
            Prob::one() - Pow::pow(miss, t as u64)
        }
    }
}

fn pack(prefix: &[Block]) -> u64 {
    Block::concat(prefix).expect("seed prefix").value()
}

pub(super) fn rejection_step(g: &OnlineGenerator, i: usize, prefix: &[Block], y: Block, attempts: Attempts) -> Result<FiniteDist> {
    let s = g.seed_widths()[i];
    let hits = g.block_preimages(i, pack(prefix), y);
    let success = success_probability(hits.len() as u64, 1u64 << s, attempts);
    let mut entries = Vec::with_capacity(hits.len() + 1);
    if !hits.is_empty() {
        let each = &success / Prob::from_integer(BigInt::from(hits.len()));
        entries.extend(hits.iter().map(|&r| (vec![Block::new(r, s)], each.clone())));
    }
    entries.push((vec![Block::bottom()], Prob::one() - success));
    FiniteDist::new(vec![s], entries)
}

/// `Sim^{G̃,T}` with every step distribution computed in closed form.
pub fn rejection_simulator_exact(cfg: &RejectionConfig) -> OnlineSimulator {
    OnlineSimulator::rejection(cfg.target.clone(), cfg.attempts)
}

/// Per-image rows `(y_i, Pr[Ỹ_i = y_i | r_{<i}], log2 1/Pr[success])` of
/// the rejection error at block `i` after seed prefix `r_{<i}`.
pub fn rejection_error_samples(g: &OnlineGenerator, i: usize, prefix: &[Block], attempts: Attempts) -> Vec<(Block, Prob, SampleValue)> {
    let s = g.seed_widths()[i];
    let base = (pack(prefix) << s) as usize;
    let mut counts: BTreeMap<Block, u64> = BTreeMap::new();
    for r in 0..1usize << s {
        *counts.entry(g.maps()[i][base + r]).or_default() += 1;
    }
    let l = 1u64 << s;
    counts
        .into_iter()
        .map(|(y, k)| (y, ratio(k, l), SampleValue::from_ratio(Prob::one(), success_probability(k, l, attempts))))
        .collect()
}

/// `E_{y_i}[log2 1/(1 − (1 − p_{y_i})^T)]` over `y_i ← G̃_i(r_{<i}, U)`.
pub fn rejection_error_term(g: &OnlineGenerator, i: usize, prefix: &[Block], attempts: Attempts) -> f64 {
    rejection_error_samples(g, i, prefix, attempts)
        .iter()
        .map(|(_, p, v)| crate::probkit::to_f64(p) * v.value)
        .sum()
}

/// `log2(1 + (L − 1)/T)`; zero in the unbounded limit.
pub fn rejection_error_bound(l: u64, attempts: Attempts) -> f64 {
    assert!(l >= 1, "codomain size must be positive");
    match attempts {
        Attempts::Unbounded => 0.0,
        Attempts::Finite(t) => {
            assert!(t >= 1, "T must be positive");
            log2_ratio(&Prob::new(BigInt::from(t) + BigInt::from(l - 1), BigInt::from(t)))
        }
    }
}

/// One call of a sampling step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct StepTrace {
    pub step: usize,
    pub attempts: u64,
    pub success: bool,
}

/// The literal loop: draw `r_i` uniformly, stop on a match or after `T`
/// draws, output ⊥ on failure.
#[derive(Clone, Debug)]
pub struct SamplingSimulator {
    generator: OnlineGenerator,
    attempts: u64,
    rng: ChaCha8Rng,
    trace: Vec<StepTrace>,
}

/// Sampling form of `Sim^{G̃,T}` driven by a seeded ChaCha8 stream.
pub fn rejection_simulator_sampling(cfg: &RejectionConfig, rng_seed: u64) -> Result<SamplingSimulator> {
    let Attempts::Finite(t) = cfg.attempts else {
        return Err(Error::Domain("the sampling simulator needs a finite attempt budget".into()));
    };
    Ok(SamplingSimulator { generator: cfg.target.clone(), attempts: t, rng: ChaCha8Rng::seed_from_u64(rng_seed), trace: Vec::new() })
}

impl SamplingSimulator {
    pub fn sample_step(&mut self, i: usize, prefix: &[Block], y: Block) -> Block {
        if prefix.iter().any(Block::is_bottom) {
            return Block::bottom();
        }
        let s = self.generator.seed_widths()[i];
        let base = pack(prefix) << s;
        for attempt in 1..=self.attempts {
            let r = if s == 0 { 0 } else { self.rng.gen_range(0..1u64 << s) };
            if self.generator.maps()[i][(base | r) as usize] == y {
                self.trace.push(StepTrace { step: i, attempts: attempt, success: true });
                return Block::new(r, s);
            }
        }
        self.trace.push(StepTrace { step: i, attempts: self.attempts, success: false });
        Block::bottom()
    }

    /// Run every step on the given instance blocks.
    pub fn run(&mut self, y: &[Block]) -> Vec<Block> {
        let mut out = Vec::with_capacity(y.len());
        for (i, &yi) in y.iter().enumerate() {
            let r = self.sample_step(i, &out, yi);
            out.push(r);
        }
        out
    }

    /// Empirical step distribution from `samples` independent calls.
    pub fn empirical_step(&mut self, i: usize, prefix: &[Block], y: Block, samples: u64) -> Result<FiniteDist> {
        let mut counts: BTreeMap<Block, u64> = BTreeMap::new();
        for _ in 0..samples {
            *counts.entry(self.sample_step(i, prefix, y)).or_default() += 1;
        }
        FiniteDist::from_weights(vec![self.generator.seed_widths()[i]], counts.into_iter().map(|(r, c)| (vec![r], c)))
    }

    pub fn trace(&self) -> &[StepTrace] {
        &self.trace
    }

    pub fn clear_trace(&mut self) {
        self.trace.clear();
    }

    /// Total generator evaluations so far.
    pub fn oracle_calls(&self) -> u64 {
        self.trace.iter().map(|t| t.attempts).sum()
    }

    pub fn max_attempts_per_step(&self) -> u64 {
        self.trace.iter().map(|t| t.attempts).max().unwrap_or(0)
    }

    pub fn budget(&self) -> u64 {
        self.attempts
    }
}

fn ratio_f(x: f64, t: u64) -> f64 {
    if x == 0.0 {
        return 1.0 / t as f64;
    }
    if t == 1 {
        return 1.0;
    }
    // 1 - (1-x)^t without cancellation
    let den = -(t as f64 * (-x).ln_1p()).exp_m1();
    x / den
}

/// Smallest second difference of `x ↦ x/(1 − (1 − x)^t)` on `grid` equally
/// spaced points of `[0, 1]`, using the limit `1/t` at zero.
pub fn convexity_min_second_difference(t: u64, grid: usize) -> f64 {
    assert!(t >= 1 && grid >= 3);
    let h = 1.0 / (grid - 1) as f64;
    let f: Vec<f64> = (0..grid).map(|j| ratio_f(j as f64 * h, t)).collect();
    f.windows(3).map(|w| w[0] - 2.0 * w[1] + w[2]).fold(f64::INFINITY, f64::min)
}

pub fn convexity_check(t: u64, grid: usize) -> bool {
    convexity_min_second_difference(t, grid) >= -crate::probkit::TOLERANCE
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probkit::{outcome, to_f64};

    fn b(s: &str) -> Block {
        Block::parse(s).unwrap()
    }

    // G̃_1(r) = 1 iff r = 11 on a 2-bit seed: p(1) = 1/4
    fn quarter() -> OnlineGenerator {
        OnlineGenerator::from_fn(vec![2], vec![1], |_, r| Block::new((r[0].value() == 3) as u64, 1)).unwrap()
    }

    #[test]
    fn exact_step_examples() {
        let det = OnlineGenerator::from_fn(vec![1], vec![1], |_, _| b("0")).unwrap();
        let sim = rejection_simulator_exact(&RejectionConfig::new(det, Attempts::Finite(1)).unwrap());
        let d = sim.step(0, &[], b("0")).unwrap();
        assert!(!d.contains_bottom());
        let d = sim.step(0, &[], b("1")).unwrap();
        assert_eq!(d, FiniteDist::point(vec![1], vec![Block::bottom()]).unwrap());

        let sim = rejection_simulator_exact(&RejectionConfig::new(quarter(), Attempts::Finite(3)).unwrap());
        let d = sim.step(0, &[], b("1")).unwrap();
        assert_eq!(d.prob(&outcome(&["11"])), ratio(37, 64));
        assert_eq!(d.prob(&outcome(&["⊥"])), ratio(27, 64));
        let d = sim.step(0, &[], b("0")).unwrap();
        assert_eq!(d.prob(&outcome(&["⊥"])), ratio(1, 64));
        assert_eq!(d.prob(&outcome(&["00"])), ratio(21, 64));
        assert!(RejectionConfig::new(quarter(), Attempts::Finite(0)).is_err());
    }

    #[test]
    fn error_term_examples() {
        let u = OnlineGenerator::from_fn(vec![1], vec![1], |_, r| r[0]).unwrap();
        assert_eq!(rejection_error_term(&u, 0, &[], Attempts::Unbounded), 0.0);
        let v = rejection_error_term(&u, 0, &[], Attempts::Finite(2));
        assert!((v - 0.4150374992788438).abs() < 1e-12);
        let c = OnlineGenerator::from_fn(vec![2], vec![1], |_, _| b("1")).unwrap();
        assert_eq!(rejection_error_term(&c, 0, &[], Attempts::Finite(1)), 0.0);
    }

    #[test]
    fn bound_examples() {
        assert_eq!(rejection_error_bound(1, Attempts::Finite(7)), 0.0);
        assert_eq!(rejection_error_bound(4, Attempts::Finite(3)), 1.0);
        assert_eq!(rejection_error_bound(4, Attempts::Unbounded), 0.0);
        for t in 1..20 {
            let g = quarter();
            assert!(rejection_error_term(&g, 0, &[], Attempts::Finite(t)) <= rejection_error_bound(2, Attempts::Finite(t)) + 1e-12);
        }
    }

    #[test]
    fn sampling_matches_exact_and_respects_budget() {
        let cfg = RejectionConfig::new(quarter(), Attempts::Finite(3)).unwrap();
        let mut s = rejection_simulator_sampling(&cfg, 7).unwrap();
        let n = 100_000;
        let emp = s.empirical_step(0, &[], b("1"), n).unwrap();
        let fail = to_f64(&emp.prob(&outcome(&["⊥"])));
        let p = 27.0 / 64.0;
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        assert!((fail - p).abs() < 3.0 * sigma, "empirical ⊥ rate {fail}");
        assert!(s.max_attempts_per_step() <= 3);
        assert_eq!(s.trace().len(), n as usize);

        let mut a = rejection_simulator_sampling(&cfg, 11).unwrap();
        let mut c = rejection_simulator_sampling(&cfg, 11).unwrap();
        let ta: Vec<Block> = (0..50).map(|_| a.sample_step(0, &[], b("1"))).collect();
        let tc: Vec<Block> = (0..50).map(|_| c.sample_step(0, &[], b("1"))).collect();
        assert_eq!(ta, tc);
        assert_eq!(a.trace(), c.trace());
        assert!(rejection_simulator_sampling(&RejectionConfig::new(quarter(), Attempts::Unbounded).unwrap(), 1).is_err());
    }

    #[test]
    fn sampling_deterministic_block_always_succeeds() {
        let det = OnlineGenerator::from_fn(vec![1], vec![1], |_, _| b("0")).unwrap();
        let mut s = rejection_simulator_sampling(&RejectionConfig::new(det, Attempts::Finite(2)).unwrap(), 3).unwrap();
        for _ in 0..100 {
            assert!(!s.sample_step(0, &[], b("0")).is_bottom());
        }
        assert_eq!(s.oracle_calls(), 100);
    }

    #[test]
    fn convexity_examples() {
        assert_eq!(convexity_min_second_difference(1, 11), 0.0);
        assert!(convexity_check(2, 1001));
        assert!(convexity_check(50, 1001));
        assert!(convexity_check(1, 3));
    }

    #[test]
    fn attempts_parse() {
        assert_eq!("inf".parse::<Attempts>().unwrap(), Attempts::Unbounded);
        assert_eq!("16".parse::<Attempts>().unwrap(), Attempts::Finite(16));
        assert!("0".parse::<Attempts>().is_err());
        assert_eq!(Attempts::Finite(4).to_string(), "4");
    }
}
