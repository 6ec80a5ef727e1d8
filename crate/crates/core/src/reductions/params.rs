use std::fmt;
use std::str::FromStr;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::pipeline::attempts_for;
use crate::error::{Error, Result};
use crate::probkit::{log2_ratio, ratio, to_f64, Prob};
use crate::serial;
use crate::simkit::Attempts;

/// Parameters shared by the theorem statements.
///
/// Time is counted in oracle calls with every hidden constant set to one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamBudget {
    /// Time bound of the hypothesis.
    pub t: f64,
    /// Success bound `ε` of the hypothesis.
    #[serde(with = "serial::rational")]
    pub eps: Prob,
    /// Quantile level `δ`.
    #[serde(with = "serial::rational")]
    pub delta: Prob,
    /// Slack `Δ′` in bits.
    #[serde(with = "serial::rational")]
    pub delta_prime: Prob,
    /// Markov level `δ′` of the quantile form.
    #[serde(with = "serial::rational")]
    pub delta_markov: Prob,
    /// Block length `ℓ` in bits.
    pub ell: u8,
    /// Number of instance blocks.
    pub m: u32,
    /// Attempt budget `T`.
    pub attempts: Attempts,
    /// Hypothesis-side entropy bound `Δ` in bits.
    #[serde(with = "serial::real")]
    pub hardness: f64,
    /// Input length of the one-way function.
    pub n: u32,
}

impl Default for ParamBudget {
    fn default() -> Self {
        ParamBudget {
            t: 1_048_576.0,
            eps: ratio(1, 1024),
            delta: ratio(1, 2),
            delta_prime: Prob::one(),
            delta_markov: ratio(1, 4),
            ell: 1,
            m: 1,
            attempts: Attempts::Finite(1),
            hardness: 1.0,
            n: 4,
        }
    }
}

impl ParamBudget {
    pub fn validate(&self) -> Result<()> {
        let unit = |p: &Prob| *p >= Prob::zero() && *p <= Prob::one();
        if !(self.eps > Prob::zero() && self.eps <= Prob::one()) {
            return Err(Error::Domain(format!("eps = {} must lie in (0, 1]", serial::format_rational(&self.eps))));
        }
        if !unit(&self.delta) {
            return Err(Error::Domain(format!("delta = {} must lie in [0, 1]", serial::format_rational(&self.delta))));
        }
        if !unit(&self.delta_markov) {
            return Err(Error::Domain(format!(
                "delta_markov = {} must lie in [0, 1]",
                serial::format_rational(&self.delta_markov)
            )));
        }
        if self.delta_prime < Prob::zero() {
            return Err(Error::Domain("delta_prime must be nonnegative".into()));
        }
        if self.attempts == Attempts::Finite(0) {
            return Err(Error::Domain("T must be at least 1".into()));
        }
        if !(self.t >= 0.0) {
            return Err(Error::Domain(format!("t = {} must be nonnegative", self.t)));
        }
        Ok(())
    }
}

/// Theorems with a parameter correspondence.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Theorem {
    /// One-wayness of `f` gives hardness in relative entropy `log(1/ε)`.
    KlHard,
    /// The δ-min form: `log(1/ε) − log(1/δ)`.
    KlHardMin,
    /// Same correspondence for witness hardness.
    WitnessKlHard,
    WitnessKlHardMin,
    /// Hardness in relative entropy is next-block hardness (chain rule).
    ChainRule,
    /// Witness hardness to next-block inaccessible relative entropy through
    /// the rejection simulator.
    BklHard,
    BklHardMin,
    /// Flat targets: inaccessible entropy equals next-block inaccessible
    /// relative entropy.
    FlatInacc,
    /// One-way function to inaccessible δ-max entropy of `G^f` in blocks
    /// of `ℓ` bits.
    OwfBlocks,
    /// [`Theorem::OwfBlocks`] with `ℓ = ⌊log n⌋`.
    OwfCorollary,
}

impl Theorem {
    pub const ALL: [Theorem; 10] = [
        Theorem::KlHard,
        Theorem::KlHardMin,
        Theorem::WitnessKlHard,
        Theorem::WitnessKlHardMin,
        Theorem::ChainRule,
        Theorem::BklHard,
        Theorem::BklHardMin,
        Theorem::FlatInacc,
        Theorem::OwfBlocks,
        Theorem::OwfCorollary,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Theorem::KlHard => "kl-hard",
            Theorem::KlHardMin => "kl-hard-min",
            Theorem::WitnessKlHard => "witness-kl-hard",
            Theorem::WitnessKlHardMin => "witness-kl-hard-min",
            Theorem::ChainRule => "chain-rule",
            Theorem::BklHard => "bkl-hard",
            Theorem::BklHardMin => "bkl-hard-min",
            Theorem::FlatInacc => "flat-inacc",
            Theorem::OwfBlocks => "owf-blocks",
            Theorem::OwfCorollary => "owf-corollary",
        }
    }
}

impl fmt::Display for Theorem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Theorem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Theorem::ALL
            .iter()
            .copied()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown theorem `{s}`")))
    }
}

/// A named conclusion-side value with the formula that produced it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Quantity {
    pub name: String,
    #[serde(with = "serial::real")]
    pub value: f64,
    pub formula: String,
}

/// Conclusion-side parameters: the budget with `t`, `hardness`, `delta`,
/// `attempts` replaced by their conclusion values, plus every derived
/// quantity by name.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Conclusion {
    pub theorem: Theorem,
    pub input: ParamBudget,
    pub output: ParamBudget,
    pub quantities: Vec<Quantity>,
}

impl Conclusion {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.quantities.iter().find(|q| q.name == name).map(|q| q.value)
    }
}

fn log_inv(p: &Prob) -> f64 {
    -log2_ratio(p)
}

fn q(name: &str, value: f64, formula: &str) -> Quantity {
    Quantity { name: name.into(), value, formula: formula.into() }
}

fn require(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Domain(msg()))
    }
}

/// Conclusion-side parameters of `theorem` given the hypothesis budget.
/// Pure arithmetic; every `Ω(·)` constant is one.
pub fn param_calculator(budget: &ParamBudget, theorem: Theorem) -> Result<Conclusion> {
    budget.validate()?;
    let b = budget;
    let mut out = b.clone();
    let mut qs = Vec::new();
    match theorem {
        Theorem::KlHard | Theorem::WitnessKlHard => {
            let d = log_inv(&b.eps);
            qs.push(q("Delta_prime", d, "log(1/eps)"));
            qs.push(q("t_prime", b.t, "t"));
            out.hardness = d;
        }
        Theorem::KlHardMin | Theorem::WitnessKlHardMin => {
            require(!b.delta.is_zero(), || "the δ-min form needs δ > 0".into())?;
            // log(1/ε) − log(1/δ) and log(δ/ε) are the same number; evaluate
            // the single rational δ/ε
            let d = log2_ratio(&(&b.delta / &b.eps));
            qs.push(q("Delta_double_prime", d, "log(1/eps) - log(1/delta) = log(delta/eps)"));
            qs.push(q("t_prime", b.t, "t"));
            qs.push(q("level", to_f64(&b.delta), "delta"));
            out.hardness = d;
        }
        Theorem::ChainRule | Theorem::FlatInacc => {
            qs.push(q("Delta_prime", b.hardness, "Delta"));
            qs.push(q("t_prime", b.t, "t"));
        }
        Theorem::BklHard | Theorem::BklHardMin => {
            require(b.m >= 1, || "need at least one block".into())?;
            let slack = to_f64(&b.delta_prime);
            require(slack > 0.0, || "Δ′ must be positive".into())?;
            let blocks = (b.ell as f64).exp2();
            let m = b.m as f64;
            let (x, level, tname) = if theorem == Theorem::BklHard {
                (slack, None, "ceil(m*2^ell/(Delta_prime*ln 2))")
            } else {
                let dm = to_f64(&b.delta_markov);
                require(dm > 0.0, || "the quantile form needs δ′ > 0".into())?;
                let level = &b.delta + &b.delta_markov;
                require(level <= Prob::one(), || "δ + δ′ must not exceed 1".into())?;
                (slack * dm, Some(level), "ceil(m*2^ell/(delta_prime*Delta_prime*ln 2))")
            };
            let t_attempts = attempts_for(b.m, b.ell, x)?;
            qs.push(q("T", t_attempts as f64, tname));
            qs.push(q("t_prime", b.t * x / (m * m * blocks), "t*Delta_prime/(m^2*2^ell)"));
            qs.push(q("t_over_calls", b.t / (m * t_attempts as f64), "t/(m*T)"));
            qs.push(q("Delta_conclusion", b.hardness - slack, "Delta - Delta_prime"));
            out.attempts = Attempts::Finite(t_attempts);
            out.hardness = b.hardness - slack;
            out.t = b.t * x / (m * m * blocks);
            if let Some(level) = level {
                qs.push(q("level", to_f64(&level), "delta + delta_prime"));
                out.delta = level;
            }
        }
        Theorem::OwfBlocks | Theorem::OwfCorollary => {
            require(b.n >= 1, || "n must be positive".into())?;
            require(!b.delta.is_zero(), || "δ must be positive".into())?;
            let ell = if theorem == Theorem::OwfCorollary { ((b.n as f64).log2().floor() as u8).max(1) } else { b.ell };
            require(ell >= 1 && ell as u32 <= b.n, || format!("need 1 ≤ ℓ ≤ n, got ℓ = {ell}, n = {}", b.n))?;
            let slack = b.hardness;
            require(slack > 0.0, || "Δ must be positive".into())?;
            let log_eps = log_inv(&b.eps);
            require(slack <= log_eps, || format!("Δ = {slack} exceeds log(1/ε) = {log_eps}"))?;
            let n = b.n as f64;
            let l = ell as f64;
            let t_prime = b.t * slack * l * l / (n * n * l.exp2());
            // log(2/δ) evaluated on the rational 2/δ
            let bound = log_eps - log2_ratio(&(Prob::from_integer(2.into()) / &b.delta)) - slack;
            qs.push(q("ell", l, if theorem == Theorem::OwfCorollary { "floor(log n)" } else { "ell" }));
            qs.push(q("m", (b.n as u64).div_ceil(ell as u64) as f64, "ceil(n/ell)"));
            qs.push(q("t_prime", t_prime, "t*Delta*ell^2/(n^2*2^ell)"));
            qs.push(q("max_entropy_bound", bound, "log(1/eps) - log(2/delta) - Delta"));
            if theorem == Theorem::OwfCorollary {
                qs.push(q("bound_over_log_n", bound / n.log2().max(1.0), "bound/log n"));
            }
            out.ell = ell;
            out.m = (b.n as u64).div_ceil(ell as u64) as u32;
            out.t = t_prime;
            out.hardness = bound;
        }
    }
    Ok(Conclusion { theorem, input: b.clone(), output: out, quantities: qs })
}
