use std::collections::BTreeMap;

use num_traits::One;

use super::{Cost, Notion, NotionValue};
use crate::error::{Error, Result};
use crate::genkit::OnlineGenerator;
use crate::probkit::{
    cond_entropy, cond_entropy_samples, cond_rel_entropy_samples, ratio, to_f64, Block, CondQuery, FiniteDist, Outcome, Prob,
    SampleRow, SampleValue,
};
use crate::simkit::OnlineSimulator;

/// Next-block conditionals `Pr[Y_i = y_i | Y_{<i} = y_{<i}]` of a target
/// distribution, keyed by the prefix `y_{≤i}`, and the entropies
/// `H(Y_i | Y_{<i})`.
#[derive(Clone, Debug)]
pub struct TargetProfile {
    widths: Vec<u8>,
    conditionals: Vec<BTreeMap<Outcome, Prob>>,
    entropies: Vec<f64>,
    support_size: usize,
}

impl TargetProfile {
    pub fn new(y: &FiniteDist) -> Self {
        let k = y.arity();
        let mut conditionals = Vec::with_capacity(k);
        let mut entropies = Vec::with_capacity(k);
        for i in 0..k {
            let positions: Vec<usize> = (0..=i).collect();
            let q = CondQuery::new(y.marginal(&positions), (0..i).collect()).expect("prefix positions");
            conditionals.push(q.conditionals().into_iter().map(|(o, _, c)| (o.clone(), c)).collect());
            entropies.push(cond_entropy(&q));
        }
        TargetProfile { widths: y.widths().to_vec(), conditionals, entropies, support_size: y.support_size() }
    }

    pub fn widths(&self) -> &[u8] {
        &self.widths
    }

    /// `Pr[Y_i = y_i | Y_{<i} = y_{<i}]` for `prefix = y_{≤i}`.
    pub fn conditional(&self, prefix: &[Block]) -> Option<&Prob> {
        self.conditionals[prefix.len() - 1].get(prefix)
    }

    /// `H(Y_i | Y_{<i})` for each block.
    pub fn block_entropies(&self) -> &[f64] {
        &self.entropies
    }
}

fn cost(g: &OnlineGenerator, target_points: usize) -> Cost {
    Cost {
        seed_paths: 1u64 << g.total_seed_bits(),
        table_entries: g.maps().iter().map(|m| m.len() as u64).sum(),
        target_points: target_points as u64,
    }
}

fn require_support(g: &OnlineGenerator, y: &FiniteDist) -> Result<()> {
    if y.widths() != g.block_widths() {
        return Err(Error::WidthMismatch(format!(
            "generator blocks {:?} against target blocks {:?}",
            g.block_widths(),
            y.widths()
        )));
    }
    if let Some(o) = g.image().into_iter().find(|o| !y.contains(o)) {
        return Err(Error::SupportViolation(format!(
            "generator emits {} outside the target support",
            crate::probkit::outcome_to_string(&o)
        )));
    }
    Ok(())
}

/// One conditional term over a common `(seeds, blocks)` layout: the joint
/// coordinates it reads, and which of those (as indices into `positions`)
/// are conditioned on.
struct TermSpec {
    positions: Vec<usize>,
    condition: Vec<usize>,
}

fn summed_terms(
    notion: Notion,
    gen_side: &FiniteDist,
    other: &FiniteDist,
    specs: &[TermSpec],
    cost: Cost,
) -> Result<NotionValue> {
    let mut terms = Vec::with_capacity(specs.len());
    let mut lookups: Vec<BTreeMap<Outcome, SampleValue>> = Vec::with_capacity(specs.len());
    for spec in specs {
        let a = CondQuery::new(gen_side.marginal(&spec.positions), spec.condition.clone())?;
        let b = CondQuery::new(other.marginal(&spec.positions), spec.condition.clone())?;
        let rows = cond_rel_entropy_samples(&a, &b)?;
        terms.push(rows.iter().map(|r| to_f64(&r.prob) * r.value.value).sum());
        lookups.push(rows.into_iter().map(|r| (r.outcome, r.value)).collect());
    }
    let samples = gen_side
        .entries()
        .iter()
        .map(|(o, p)| {
            let value = specs.iter().zip(&lookups).fold(SampleValue::zero(), |acc, (spec, look)| {
                let key: Outcome = spec.positions.iter().map(|&j| o[j]).collect();
                acc.add(&look[&key])
            });
            SampleRow { outcome: o.clone(), prob: p.clone(), value }
        })
        .collect();
    Ok(NotionValue { notion, expectation: terms.iter().sum(), terms, samples, delta_quantile: None, cost })
}

/// `Σ_i KL(R̃_i, Ỹ_i | R̃_{<i}, Ỹ_{<i} ‖ R̂_i, Y_i | R̂_{<i}, Y_{<i})` for an
/// online pair on an `m`-block target. Samples are `(r, G̃(r))`.
pub fn nb_hardness_re(y: &FiniteDist, g: &OnlineGenerator, s: &OnlineSimulator) -> Result<NotionValue> {
    require_support(g, y)?;
    s.check_valid(g)?;
    let m = g.num_blocks();
    let gen_side = g.output_joint();
    let sim_side = s.induced_joint(y, m)?;
    let specs: Vec<TermSpec> = (0..m)
        .map(|i| {
            let mut positions: Vec<usize> = (0..=i).collect();
            positions.extend(m..=m + i);
            // [R_<i, R_i, Y_<i, Y_i]: condition on R_<i and Y_<i
            let mut condition: Vec<usize> = (0..i).collect();
            condition.extend(i + 1..=2 * i);
            TermSpec { positions, condition }
        })
        .collect();
    summed_terms(Notion::NbHardnessRe, &gen_side, &sim_side, &specs, cost(g, sim_side.support_size()))
}

/// `Σ_i KL(Ỹ_i | R̃_{<i}, Ỹ_{<i} ‖ Y_i | R_{<i}, Y_{<i})` with the dummy seeds
/// `R` realised as independent uniform coordinates next to `Y`.
pub fn nb_inaccessible_re(y: &FiniteDist, g: &OnlineGenerator) -> Result<NotionValue> {
    require_support(g, y)?;
    let m = g.num_blocks();
    let gen_side = g.output_joint();
    let target = FiniteDist::uniform(g.seed_widths().to_vec()).product(y);
    let specs: Vec<TermSpec> = (0..m)
        .map(|i| {
            let mut positions: Vec<usize> = (0..i).collect();
            positions.extend(m..=m + i);
            TermSpec { positions, condition: (0..2 * i).collect() }
        })
        .collect();
    summed_terms(Notion::NbInaccessibleRe, &gen_side, &target, &specs, cost(g, y.support_size()))
}

/// Same value as [`nb_inaccessible_re`], evaluated directly from the seed
/// tree: the sample at `r` is `log Π_i p_i / Pr[Y_i = y_i | Y_{<i} = y_{<i}]`
/// where `p_i = Pr[G̃_i(r_{<i}, R̃_i) = y_i]`.
pub fn nb_inaccessible_re_profiled(profile: &TargetProfile, g: &OnlineGenerator) -> Result<NotionValue> {
    if profile.widths() != g.block_widths() {
        return Err(Error::WidthMismatch("generator and target blocks differ".into()));
    }
    let m = g.num_blocks();
    let mass = g.seed_mass();
    let mut terms = vec![0.0; m];
    let mut samples = Vec::new();
    for r in g.seed_tuples() {
        let y = g.eval(&r);
        let (mut num, mut den) = (Prob::one(), Prob::one());
        let mut packed = 0u64;
        for i in 0..m {
            let s = g.seed_widths()[i];
            let hits = g.block_preimages(i, packed, y[i]).len() as u64;
            let p = ratio(hits, 1u64 << s);
            let q = profile.conditional(&y[..=i]).ok_or_else(|| {
                Error::SupportViolation(format!("prefix {} has no target mass", crate::probkit::outcome_to_string(&y[..=i])))
            })?;
            terms[i] += to_f64(&mass) * SampleValue::from_ratio(p.clone(), q.clone()).value;
            num *= p;
            den *= q;
            packed = (packed << s) | r[i].value();
        }
        let mut outcome = r.clone();
        outcome.extend(y);
        samples.push(SampleRow { outcome, prob: mass.clone(), value: SampleValue::from_ratio(num, den) });
    }
    Ok(NotionValue {
        notion: Notion::NbInaccessibleRe,
        expectation: terms.iter().sum(),
        terms,
        samples,
        delta_quantile: None,
        cost: cost(g, profile.support_size),
    })
}

/// `Σ_i (H(Y_i | Y_{<i}) − H(Ỹ_i | R̃_{<i}))`.
///
/// Samples are taken under the generator, so for targets that are not flat
/// the expectation (whose first term is under `Y`) need not equal the sample
/// mean.
pub fn inaccessible_entropy(y: &FiniteDist, g: &OnlineGenerator) -> Result<NotionValue> {
    require_support(g, y)?;
    let profile = TargetProfile::new(y);
    let m = g.num_blocks();
    let gen_side = g.output_joint();
    let mut terms = Vec::with_capacity(m);
    let mut accessible: Vec<BTreeMap<Outcome, Prob>> = Vec::with_capacity(m);
    for i in 0..m {
        let mut positions: Vec<usize> = (0..i).collect();
        positions.push(m + i);
        let q = CondQuery::new(gen_side.marginal(&positions), (0..i).collect())?;
        let rows = cond_entropy_samples(&q);
        let h: f64 = rows.iter().map(|r| to_f64(&r.prob) * r.value.value).sum();
        terms.push(profile.block_entropies()[i] - h);
        accessible.push(rows.into_iter().map(|r| (r.outcome, r.value.inverse_ratio())).collect());
    }
    let mut samples = Vec::with_capacity(gen_side.support_size());
    for (o, p) in gen_side.entries() {
        let (mut num, mut den) = (Prob::one(), Prob::one());
        for (i, acc) in accessible.iter().enumerate() {
            let mut key: Outcome = o[..i].to_vec();
            key.push(o[m + i]);
            num *= &acc[&key];
            den *= profile.conditional(&o[m..=m + i]).expect("in-support generator");
        }
        samples.push(SampleRow { outcome: o.clone(), prob: p.clone(), value: SampleValue::from_ratio(num, den) });
    }
    Ok(NotionValue {
        notion: Notion::InaccessibleEntropy,
        expectation: terms.iter().sum(),
        terms,
        samples,
        delta_quantile: None,
        cost: cost(g, y.support_size()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::notions::hardness_re;
    use crate::notions::AdversaryPair;
    use crate::probkit::outcome;
    use crate::simkit::{rejection_simulator_exact, Attempts, RejectionConfig, Simulator};

    // Oracle: 2*(2 - 0.75*log2 3 - 1) = -0.3774437510817343 (mpmath)

    fn b(s: &str) -> Block {
        Block::parse(s).unwrap()
    }

    fn copy_target() -> FiniteDist {
        FiniteDist::uniform_over(vec![1, 1], [outcome(&["0", "0"]), outcome(&["1", "1"])]).unwrap()
    }

    fn copy_gen() -> OnlineGenerator {
        OnlineGenerator::from_fn(vec![1, 1], vec![1, 1], |_, r| r[0]).unwrap()
    }

    fn const_gen() -> OnlineGenerator {
        OnlineGenerator::from_fn(vec![1, 1], vec![1, 1], |_, _| b("0")).unwrap()
    }

    #[test]
    fn nb_inaccessible_examples() {
        let y = copy_target();
        let v = nb_inaccessible_re(&y, &copy_gen()).unwrap();
        assert_eq!(v.expectation, 0.0);
        let u = FiniteDist::uniform(vec![1, 1]);
        let v = nb_inaccessible_re(&u, &const_gen()).unwrap();
        assert_eq!(v.terms, vec![1.0, 1.0]);
        assert_eq!(v.expectation, 2.0);
        let perfect = OnlineGenerator::from_fn(vec![1, 1], vec![1, 1], |i, r| r[i]).unwrap();
        assert_eq!(nb_inaccessible_re(&u, &perfect).unwrap().expectation, 0.0);
        assert!(matches!(nb_inaccessible_re(&y, &perfect), Err(Error::SupportViolation(_))));
    }

    #[test]
    fn profiled_matches_explicit_dummy_route() {
        let cases = [(FiniteDist::uniform(vec![1, 1]), const_gen()), (copy_target(), copy_gen())];
        for (y, g) in cases {
            let a = nb_inaccessible_re(&y, &g).unwrap();
            let c = nb_inaccessible_re_profiled(&TargetProfile::new(&y), &g).unwrap();
            assert!((a.expectation - c.expectation).abs() < 1e-12);
            for (ra, rc) in a.samples.iter().zip(&c.samples) {
                assert_eq!(ra.outcome, rc.outcome);
                assert!(ra.value.exact_eq(&rc.value));
            }
        }
    }

    #[test]
    fn inaccessible_entropy_examples() {
        let u = FiniteDist::uniform(vec![1, 1]);
        assert_eq!(inaccessible_entropy(&u, &const_gen()).unwrap().expectation, 2.0);
        assert_eq!(inaccessible_entropy(&copy_target(), &copy_gen()).unwrap().expectation, 0.0);

        let biased = FiniteDist::bernoulli(ratio(1, 4)).unwrap();
        let biased = biased.product(&biased);
        let unbiased = OnlineGenerator::from_fn(vec![1, 1], vec![1, 1], |i, r| r[i]).unwrap();
        let ie = inaccessible_entropy(&biased, &unbiased).unwrap();
        assert!((ie.expectation + 0.3774437510817343).abs() < 1e-12);
        let nb = nb_inaccessible_re(&biased, &unbiased).unwrap();
        assert!(nb.expectation >= 0.0);
        // per-sample the two still agree
        for (a, c) in ie.samples.iter().zip(&nb.samples) {
            assert!(a.value.exact_eq(&c.value));
        }
    }

    #[test]
    fn nb_hardness_single_block_is_hardness() {
        // m = 1: one block carrying the whole instance
        let and = |x: u64| Block::new((x == 3) as u64, 1);
        let g1 = OnlineGenerator::from_fn(vec![2], vec![1], |_, r| and(r[0].value())).unwrap();
        let y = g1.output_dist();
        let sim = rejection_simulator_exact(&RejectionConfig::new(g1.clone(), Attempts::Finite(2)).unwrap());
        let nb = nb_hardness_re(&y, &g1, &sim).unwrap();

        let rel = crate::genkit::Relation::new(1, 2, (0..4).map(|x| (and(x), Block::new(x, 2)))).unwrap();
        let problem = crate::genkit::SearchProblem::new(rel, y.clone()).unwrap();
        let two = crate::genkit::BlockGenerator::from_fn(2, vec![1, 2], |x| vec![and(x.value()), x]).unwrap();
        let offline = Simulator::from_online(&sim, 1, [b("0"), b("1")]).unwrap();
        let h = hardness_re(&problem, &AdversaryPair { generator: two, simulator: offline }).unwrap();
        assert!((nb.expectation - h.expectation).abs() < 1e-12);
        assert!(nb.expectation > 0.0);
    }

    #[test]
    fn perfect_online_pair_is_zero() {
        let g = copy_gen();
        let y = copy_target();
        let v = nb_hardness_re(&y, &g, &OnlineSimulator::posterior(&g)).unwrap();
        assert_eq!(v.expectation, 0.0);
        assert!(v.samples.iter().all(|r| r.value.value == 0.0));
    }
}
