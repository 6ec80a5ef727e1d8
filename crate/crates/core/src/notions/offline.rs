use super::{AdversaryPair, Cost, Notion, NotionValue};
use crate::error::{Error, Result};
use crate::genkit::{Relation, SearchProblem};
use crate::probkit::{rel_entropy_samples, rel_entropy_samples_extended, to_f64, FiniteDist, SampleRow};
use crate::simkit::Simulator;

fn value_of(notion: Notion, samples: Vec<SampleRow>, cost: Cost) -> NotionValue {
    let expectation = if samples.iter().all(|r| r.value.is_finite()) {
        samples.iter().map(|r| to_f64(&r.prob) * r.value.value).sum()
    } else {
        f64::INFINITY
    };
    NotionValue { notion, expectation, terms: Vec::new(), samples, delta_quantile: None, cost }
}

fn check_pair(rel: &Relation, adv: &AdversaryPair) -> Result<()> {
    if !adv.generator.supported_on(rel) {
        return Err(Error::NotSupported("two-block generator leaves the relation".into()));
    }
    if adv.generator.seed_width() != adv.simulator.seed_width() {
        return Err(Error::InvalidSimulator(format!(
            "simulator emits {}-bit seeds, generator reads {}",
            adv.simulator.seed_width(),
            adv.generator.seed_width()
        )));
    }
    Ok(())
}

fn cost(adv: &AdversaryPair, target: &FiniteDist) -> Cost {
    let rows = adv.generator.table().len() as u64;
    Cost {
        seed_paths: rows,
        table_entries: rows * adv.generator.block_widths().len() as u64,
        target_points: target.support_size() as u64,
    }
}

fn samples(gen_side: &FiniteDist, sim_side: &FiniteDist, extended: bool) -> Result<Vec<SampleRow>> {
    if extended {
        rel_entropy_samples_extended(gen_side, sim_side)
    } else {
        rel_entropy_samples(gen_side, sim_side)
    }
}

fn hardness(problem: &SearchProblem, adv: &AdversaryPair, extended: bool) -> Result<NotionValue> {
    check_pair(problem.relation(), adv)?;
    let g = adv.generator.two_block()?;
    let gen_side = g.seed_output_joint().marginal(&[0, 1]);
    let sim_side = adv.simulator.joint(problem.instances())?;
    let rows = samples(&gen_side, &sim_side, extended)?;
    Ok(value_of(Notion::HardnessRe, rows, cost(adv, &sim_side)))
}

fn witness_hardness(rel: &Relation, yw: &FiniteDist, adv: &AdversaryPair, extended: bool) -> Result<NotionValue> {
    if !rel.supports(yw) {
        return Err(Error::NotSupported("(Y, W) leaves the relation".into()));
    }
    check_pair(rel, adv)?;
    let g = adv.generator.two_block()?;
    let gen_side = g.seed_output_joint();
    let sim_side = adv.simulator.joint(yw)?;
    let rows = samples(&gen_side, &sim_side, extended)?;
    Ok(value_of(Notion::WitnessHardnessRe, rows, cost(adv, &sim_side)))
}

/// `KL(R̃, G̃_1(R̃) ‖ S(Y), Y)` over samples `(r, G̃_1(r))`.
pub fn hardness_re(problem: &SearchProblem, adv: &AdversaryPair) -> Result<NotionValue> {
    hardness(problem, adv, false)
}

/// [`hardness_re`] with support violations reported as `+∞` samples.
pub fn hardness_re_extended(problem: &SearchProblem, adv: &AdversaryPair) -> Result<NotionValue> {
    hardness(problem, adv, true)
}

/// `KL(R̃, G̃_1(R̃), G̃_w(R̃) ‖ S(Y), Y, W)`.
pub fn witness_hardness_re(rel: &Relation, yw: &FiniteDist, adv: &AdversaryPair) -> Result<NotionValue> {
    witness_hardness(rel, yw, adv, false)
}

/// [`witness_hardness_re`] with support violations reported as `+∞` samples.
pub fn witness_hardness_re_extended(rel: &Relation, yw: &FiniteDist, adv: &AdversaryPair) -> Result<NotionValue> {
    witness_hardness(rel, yw, adv, true)
}

/// `KL(Y, W ‖ Y, S(Y))` where the simulator outputs witnesses.
pub fn relative_pseudoentropy(yw: &FiniteDist, s: &Simulator) -> Result<NotionValue> {
    if yw.arity() != 2 || s.seed_width() != yw.widths()[1] || s.instance_width() != yw.widths()[0] {
        return Err(Error::WidthMismatch(format!(
            "simulator {}→{} bits against (Y, W) over {:?}",
            s.instance_width(),
            s.seed_width(),
            yw.widths()
        )));
    }
    let y = yw.marginal(&[0]);
    let sim_side = s.joint(&y)?.pushforward(yw.widths().to_vec(), |o| vec![o[1], o[0]])?;
    let samples = rel_entropy_samples(yw, &sim_side)?;
    let cost = Cost { seed_paths: 0, table_entries: s.map().len() as u64, target_points: yw.support_size() as u64 };
    Ok(value_of(Notion::RelativePseudoentropy, samples, cost))
}
