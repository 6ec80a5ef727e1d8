use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Zero};

use super::{Check, LedgerRow, ReductionReport};
use crate::error::{Error, Result};
use crate::genkit::{BlockGenerator, Relation, SearchProblem};
use crate::notions::{hardness_re_extended, witness_hardness_re_extended, AdversaryPair, NotionValue};
use crate::probkit::{outcome_to_string, quantile_sample, ratio, to_f64, Block, FiniteDist, Prob, SampleRow};
use crate::serial::format_rational;
use crate::simkit::Simulator;

/// Fixed quantile levels checked by the δ-forms, in addition to every
/// cumulative mass of the sample distribution.
pub const DELTA_GRID: [(u64, u64); 5] = [(1, 8), (1, 4), (1, 2), (3, 4), (1, 1)];

/// Method-path label of a data-processing step for δ-min relative entropy.
/// No verifier takes it: the witness bounds are derived sample by sample.
pub const FORBIDDEN_STEP: &str = "min-relative-entropy-data-processing";

/// `A(y) = G̃_w(S(y))`, tabulated as a distribution over witnesses or ⊥.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Solver {
    witness_width: u8,
    map: BTreeMap<Block, FiniteDist>,
}

impl Solver {
    pub fn witness_width(&self) -> u8 {
        self.witness_width
    }

    pub fn map(&self) -> &BTreeMap<Block, FiniteDist> {
        &self.map
    }

    pub fn on(&self, y: &Block) -> Result<&FiniteDist> {
        self.map.get(y).ok_or_else(|| Error::OutOfSupport(format!("solver undefined on instance {y}")))
    }

    /// `Pr[Π(Y, A(Y))]`, exactly.
    pub fn success(&self, problem: &SearchProblem) -> Result<Prob> {
        let rel = problem.relation();
        let mut total = Prob::zero();
        for (o, p) in problem.instances().entries() {
            for (w, q) in self.on(&o[0])?.entries() {
                if !w[0].is_bottom() && rel.contains(&o[0], &w[0]) {
                    total += p * q;
                }
            }
        }
        Ok(total)
    }
}

/// The oracle algorithm that runs the simulator and feeds its seed to the
/// witness block of the generator.
pub fn adversary_from_pair(g: &BlockGenerator, s: &Simulator) -> Result<Solver> {
    let two = g.two_block()?;
    if s.seed_width() != two.seed_width() || s.instance_width() != two.block_widths()[0] {
        return Err(Error::InvalidSimulator(format!(
            "simulator maps {} bits to {}-bit seeds; generator reads {} bits and emits {}-bit instances",
            s.instance_width(),
            s.seed_width(),
            two.seed_width(),
            two.block_widths()[0]
        )));
    }
    let ww = two.block_widths()[1];
    let map = s
        .map()
        .iter()
        .map(|(y, d)| {
            let entries = d.entries().iter().map(|(r, q)| {
                let w = if r[0].is_bottom() { Block::bottom() } else { two.witness(r[0]) };
                (vec![w], q.clone())
            });
            Ok((*y, FiniteDist::new(vec![ww], entries)?))
        })
        .collect::<Result<_>>()?;
    Ok(Solver { witness_width: ww, map })
}

/// `Pr[G̃(S(Y)) ∈ accept(Y, rest)]` over the target: the mass the simulator
/// puts on seeds whose generator output matches the target row.
fn simulator_hits(two: &BlockGenerator, s: &Simulator, target: &FiniteDist, full_row: bool) -> Result<Prob> {
    let mut total = Prob::zero();
    for (o, p) in target.entries() {
        for (r, q) in s.on(&o[0])?.entries() {
            if r[0].is_bottom() {
                continue;
            }
            let out = two.eval(r[0]);
            let hit = if full_row { out.as_slice() == o.as_slice() } else { out[0] == o[0] };
            if hit {
                total += p * q;
            }
        }
    }
    Ok(total)
}

/// `E[2^{-sample}] = Σ_{finite samples} q`.
fn sample_mass(rows: &[SampleRow]) -> Prob {
    rows.iter().map(|r| &r.prob * r.value.inverse_ratio()).sum()
}

fn delta_levels(rows: &[SampleRow]) -> Vec<Prob> {
    let mut levels: BTreeSet<Prob> = DELTA_GRID.iter().map(|&(n, d)| ratio(n, d)).collect();
    let mut sorted: Vec<&SampleRow> = rows.iter().collect();
    sorted.sort_by(|a, b| a.value.cmp_exact(&b.value));
    let mut cum = Prob::zero();
    for r in sorted {
        cum += &r.prob;
        levels.insert(cum.clone());
    }
    levels.into_iter().filter(|d| !d.is_zero() && *d <= Prob::one()).collect()
}

fn pow2_neg(x: f64) -> f64 {
    (-x).exp2()
}

/// δ-forms: with `v` the δ-quantile sample, the rows at or below `v` carry
/// mass at least δ, and each contributes `p·2^{-sample} ≥ p·2^{-v}`; so the
/// simulated mass on them is at least `δ·2^{-v}`. Decided on rationals.
fn delta_checks(report: &mut ReductionReport, label: &str, h: &NotionValue, success: &Prob) {
    for delta in delta_levels(&h.samples) {
        let Some(v) = quantile_sample(h.samples.iter().map(|r| (&r.prob, &r.value)), &delta) else {
            continue;
        };
        let d = format_rational(&delta);
        let bound = &delta * v.inverse_ratio();
        let tail: Prob = h
            .samples
            .iter()
            .filter(|r| r.value.cmp_exact(v) != std::cmp::Ordering::Greater)
            .map(|r| &r.prob * r.value.inverse_ratio())
            .sum();
        report.check(Check::ge_exact(format!("{label} tail mass at δ={d} ≥ δ·2^-Δ_δ"), &tail, &bound));
        report.check(Check::ge_exact(format!("success ≥ δ·2^-Δ_δ at δ={d} ({label})"), success, &bound));
    }
    report.step("quantile-tail-mass");
}

fn ledger(report: &mut ReductionReport, h: &NotionValue) {
    report.columns = vec!["sample".into(), "2^-sample".into()];
    for r in &h.samples {
        report.row(LedgerRow {
            outcome: outcome_to_string(&r.outcome),
            prob: r.prob.clone(),
            values: vec![r.value.value, to_f64(&r.value.inverse_ratio())],
            deviation: 0.0,
            exact: None,
        });
    }
}

/// Hardness in relative entropy `Δ` bounds the solver's success from below:
/// `success ≥ Pr[G̃_1(S(Y)) = Y] = E[2^{-sample}] ≥ 2^{-Δ}`, and for each
/// level δ, `success ≥ δ·2^{-Δ_δ}` with `Δ_δ` the δ-quantile.
pub fn verify_success_lower_bound(problem: &SearchProblem, adv: &AdversaryPair) -> Result<ReductionReport> {
    let mut report = ReductionReport::new("success-lower-bound");
    let h = hardness_re_extended(problem, adv)?;
    report.step("hardness-samples");
    let solver = adversary_from_pair(&adv.generator, &adv.simulator)?;
    let success = solver.success(problem)?;
    report.step("exact-success");
    let two = adv.generator.two_block()?;
    let hits = simulator_hits(&two, &adv.simulator, problem.instances(), false)?;
    let mass = sample_mass(&h.samples);
    report.step("sample-mass-identity");

    report.lhs_value = h.expectation;
    report.rhs_value = to_f64(&success);
    report.bound = pow2_neg(h.expectation);
    report.param("Delta", crate::serial::format_real(h.expectation));
    report.param("success", format_rational(&success));

    report.check(Check::ge_exact("success ≥ Pr[G1(S(Y)) = Y]", &success, &hits));
    report.check(Check::eq_exact("Pr[G1(S(Y)) = Y] = E[2^-sample]", &hits, &mass));
    report.check(Check::ge("E[2^-sample] ≥ 2^-Δ", to_f64(&mass), report.bound));
    report.step("jensen");
    report.check(Check::ge("success ≥ 2^-Δ", report.rhs_value, report.bound));
    delta_checks(&mut report, "hardness", &h, &success);
    ledger(&mut report, &h);
    Ok(report)
}

/// Witness hardness `Δw` bounds the same success probability through the
/// chain `success ≥ Pr[G̃_1(S(Y)) = Y] ≥ Pr[G̃(S(Y)) = (Y, W)] =
/// E[2^{-sample}] ≥ 2^{-Δw}`, with δ-forms from the witness samples
/// directly. Also checks `hardness ≤ witness hardness`.
pub fn verify_witness_bounds(rel: &Relation, yw: &FiniteDist, adv: &AdversaryPair) -> Result<ReductionReport> {
    let mut report = ReductionReport::new("witness-bounds");
    let hw = witness_hardness_re_extended(rel, yw, adv)?;
    report.step("witness-hardness-samples");
    let problem = SearchProblem::new(rel.clone(), yw.marginal(&[0]))?;
    let solver = adversary_from_pair(&adv.generator, &adv.simulator)?;
    let success = solver.success(&problem)?;
    report.step("exact-success");
    let two = adv.generator.two_block()?;
    let instance_hits = simulator_hits(&two, &adv.simulator, yw, false)?;
    let pair_hits = simulator_hits(&two, &adv.simulator, yw, true)?;
    let mass = sample_mass(&hw.samples);
    report.step("witness-sample-mass-identity");

    report.lhs_value = hw.expectation;
    report.rhs_value = to_f64(&success);
    report.bound = pow2_neg(hw.expectation);
    report.param("Delta_w", crate::serial::format_real(hw.expectation));
    report.param("success", format_rational(&success));

    report.check(Check::ge_exact("success ≥ Pr[G1(S(Y)) = Y]", &success, &instance_hits));
    report.check(Check::ge_exact("Pr[G1(S(Y)) = Y] ≥ Pr[G(S(Y)) = (Y,W)]", &instance_hits, &pair_hits));
    report.check(Check::eq_exact("Pr[G(S(Y)) = (Y,W)] = E[2^-sample]", &pair_hits, &mass));
    report.check(Check::ge("E[2^-sample] ≥ 2^-Δw", to_f64(&mass), report.bound));
    report.step("jensen");
    report.check(Check::ge("success ≥ 2^-Δw", report.rhs_value, report.bound));
    delta_checks(&mut report, "witness", &hw, &success);

    let h = hardness_re_extended(&problem, adv)?;
    report.step("expectation-data-processing");
    report.check(Check::ge("witness hardness ≥ hardness", hw.expectation, h.expectation));
    ledger(&mut report, &hw);
    Ok(report)
}
