use std::cmp::Ordering;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::genkit::{FamilyMode, GeneratorFamily, OnlineGenerator, Relation, SearchProblem};
use crate::notions::{
    hardness_re_extended, inaccessible_entropy, nb_hardness_re, nb_inaccessible_re_profiled, witness_hardness_re_extended,
    AdversaryPair, Notion, NotionValue, OnlinePair, TargetProfile,
};
use crate::probkit::{outcome_to_string, FiniteDist};
use crate::serial::{content_hash, format_rational};
use crate::simkit::{OnlineSimulator, Simulator};

/// What the search minimises over.
#[derive(Clone, Debug)]
pub enum SearchTarget {
    /// A relation with the two-block joint `(Y, W)`: for the offline notions.
    Problem { relation: Relation, joint: FiniteDist },
    /// A blocked target distribution: for the next-block notions.
    Dist(FiniteDist),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RandomSearch {
    pub seed: u64,
    pub samples: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchSpec {
    pub notion: Notion,
    /// Per-block seed widths (one entry for the offline notions).
    pub seed_widths: Vec<u8>,
    pub mode: FamilyMode,
    /// Largest family enumerated exhaustively.
    pub cap: u128,
    /// Fallback when the family exceeds `cap`.
    pub random: Option<RandomSearch>,
    pub parallel: bool,
}

/// The minimising adversary. Simulators are the generator's posterior,
/// which minimises every simulator-based notion for a fixed generator.
#[derive(Clone, Debug)]
pub enum Adversary {
    Offline(AdversaryPair),
    Online(OnlinePair),
    Generator(OnlineGenerator),
}

impl Adversary {
    pub fn generator(&self) -> OnlineGenerator {
        match self {
            Adversary::Offline(p) => p.generator.as_online(),
            Adversary::Online(p) => p.generator.clone(),
            Adversary::Generator(g) => g.clone(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct BruteForceResult {
    pub notion: Notion,
    pub best: f64,
    /// Enumeration (or sample) index of the minimiser; first one wins ties.
    pub index: u64,
    /// True when the whole family was enumerated.
    pub exact: bool,
    pub evaluated: u64,
    pub family_size: u128,
    pub adversary: Adversary,
    pub value: NotionValue,
    /// SHA-256 over the minimiser's exact per-sample ratios.
    pub fingerprint: String,
}

struct Evaluator {
    notion: Notion,
    target: SearchTarget,
    profile: Option<TargetProfile>,
    problem: Option<SearchProblem>,
}

impl Evaluator {
    fn new(notion: Notion, target: &SearchTarget) -> Result<Self> {
        let (profile, problem) = match (notion, target) {
            (Notion::HardnessRe | Notion::WitnessHardnessRe, SearchTarget::Problem { relation, joint }) => {
                (None, Some(SearchProblem::new(relation.clone(), joint.marginal(&[0]))?))
            }
            (Notion::NbInaccessibleRe, SearchTarget::Dist(y)) => (Some(TargetProfile::new(y)), None),
            (Notion::NbHardnessRe | Notion::InaccessibleEntropy, SearchTarget::Dist(_)) => (None, None),
            (Notion::RelativePseudoentropy, _) => {
                return Err(Error::Domain("relative pseudoentropy is searched over simulators, not generators".into()))
            }
            (n, _) => return Err(Error::Domain(format!("{n} needs a {} target", if n.is_offline() { "problem" } else { "distribution" }))),
        };
        Ok(Evaluator { notion, target: target.clone(), profile, problem })
    }

    fn family(&self, seed_widths: &[u8], mode: FamilyMode) -> Result<GeneratorFamily> {
        match &self.target {
            SearchTarget::Problem { relation, joint } => {
                let s = match seed_widths {
                    [s] | [s, 0] => *s,
                    _ => return Err(Error::InvalidGenerator(format!("offline search takes one seed width, got {seed_widths:?}"))),
                };
                if self.notion == Notion::HardnessRe {
                    GeneratorFamily::over_relation(relation, s, mode)
                } else {
                    GeneratorFamily::over_dist(joint, vec![s, 0], mode)
                }
            }
            SearchTarget::Dist(y) => GeneratorFamily::over_dist(y, seed_widths.to_vec(), mode),
        }
    }

    fn evaluate(&self, g: &OnlineGenerator) -> Result<(NotionValue, Adversary)> {
        match (&self.target, self.notion) {
            (SearchTarget::Problem { relation, joint }, notion) => {
                let generator = g.flatten();
                let problem = self.problem.as_ref().expect("problem built for offline notions");
                let simulator = Simulator::posterior(&generator, problem.instances().support().map(|o| o[0]))?;
                let pair = AdversaryPair { generator, simulator };
                let v = if notion == Notion::HardnessRe {
                    hardness_re_extended(problem, &pair)?
                } else {
                    witness_hardness_re_extended(relation, joint, &pair)?
                };
                Ok((v, Adversary::Offline(pair)))
            }
            (SearchTarget::Dist(y), Notion::NbHardnessRe) => {
                let s = OnlineSimulator::posterior(g);
                Ok((nb_hardness_re(y, g, &s)?, Adversary::Online(OnlinePair { generator: g.clone(), simulator: s })))
            }
            (SearchTarget::Dist(_), Notion::NbInaccessibleRe) => {
                let profile = self.profile.as_ref().expect("profile built");
                Ok((nb_inaccessible_re_profiled(profile, g)?, Adversary::Generator(g.clone())))
            }
            (SearchTarget::Dist(y), _) => Ok((inaccessible_entropy(y, g)?, Adversary::Generator(g.clone()))),
        }
    }

    fn score(&self, g: &OnlineGenerator) -> Result<f64> {
        Ok(self.evaluate(g)?.0.expectation)
    }
}

/// `(value, index)` with the first index winning ties.
fn better(a: (f64, u64), b: (f64, u64)) -> (f64, u64) {
    match a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)) {
        Ordering::Greater => b,
        _ => a,
    }
}

fn reduce(acc: Result<Option<(f64, u64)>>, next: Result<Option<(f64, u64)>>) -> Result<Option<(f64, u64)>> {
    match (acc?, next?) {
        (Some(a), Some(b)) => Ok(Some(better(a, b))),
        (a, b) => Ok(a.or(b)),
    }
}

fn fingerprint(v: &NotionValue) -> String {
    let rows: Vec<(String, String, String)> = v
        .samples
        .iter()
        .map(|r| {
            let ratio = r.value.ratio().map_or_else(|| "inf".to_string(), |x| format_rational(&x));
            (outcome_to_string(&r.outcome), format_rational(&r.prob), ratio)
        })
        .collect();
    content_hash(&(v.notion.name(), rows))
}

/// Minimum of a notion over a generator family, exhaustively when the family
/// fits under the cap, otherwise over seeded random members if a fallback is
/// configured. Parallel and serial runs return the same minimiser.
pub fn brute_force_best(target: &SearchTarget, spec: &SearchSpec) -> Result<BruteForceResult> {
    let eval = Evaluator::new(spec.notion, target)?;
    let family = eval.family(&spec.seed_widths, spec.mode)?;
    let size = family.count();
    let exact = size <= spec.cap;
    if !exact && spec.random.is_none() {
        return Err(Error::BudgetExceeded { size, cap: spec.cap });
    }

    let score = |(i, g): (usize, OnlineGenerator)| eval.score(&g).map(|v| Some((v, i as u64)));
    let (best, evaluated) = if exact {
        let best = if spec.parallel {
            family.iter().enumerate().par_bridge().map(score).reduce(|| Ok(None), reduce)?
        } else {
            family.iter().enumerate().map(score).fold(Ok(None), reduce)?
        };
        (best, size as u64)
    } else {
        let rs = spec.random.expect("fallback checked");
        let family = &family;
        let members = |rs: RandomSearch| {
            let mut rng = ChaCha8Rng::seed_from_u64(rs.seed);
            (0..rs.samples).map(move |_| family.sample(&mut rng))
        };
        let best = if spec.parallel {
            members(rs).enumerate().par_bridge().map(score).reduce(|| Ok(None), reduce)?
        } else {
            members(rs).enumerate().map(score).fold(Ok(None), reduce)?
        };
        (best, rs.samples)
    };
    let (best, index) = best.ok_or_else(|| Error::InvalidGenerator("empty generator family".into()))?;

    let winner = if exact {
        family.iter().nth(index as usize).expect("index within family")
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.random.expect("fallback").seed);
        (0..=index).map(|_| family.sample(&mut rng)).last().expect("at least one sample")
    };
    let (value, adversary) = eval.evaluate(&winner)?;
    Ok(BruteForceResult {
        notion: spec.notion,
        best,
        index,
        exact,
        evaluated,
        family_size: size,
        fingerprint: fingerprint(&value),
        adversary,
        value,
    })
}
