use std::collections::BTreeMap;

use num_traits::{One, Zero};

use super::params::ParamBudget;
use super::{Check, LedgerRow, ReductionReport};
use crate::error::{Error, Result};
use crate::genkit::{OnlineGenerator, Relation};
use crate::notions::{
    inaccessible_entropy, nb_hardness_re, nb_inaccessible_re, witness_hardness_re_extended, AdversaryPair, OnlinePair,
    TargetProfile,
};
use crate::probkit::{
    log2_ratio, outcome_to_string, quantile, rel_entropy_samples_extended, to_f64, Block, FiniteDist, Outcome, Prob,
    SampleValue,
};
use crate::serial::{format_rational, format_real};
use crate::simkit::{
    rejection_error_bound, rejection_error_term, rejection_simulator_exact, success_probability, Attempts,
    RejectionConfig, Simulator,
};

fn deviation(a: &SampleValue, b: &SampleValue) -> f64 {
    if a.value == b.value {
        0.0
    } else {
        (a.value - b.value).abs()
    }
}

fn expectation(rows: impl Iterator<Item = (Prob, f64)>) -> f64 {
    let mut total = 0.0;
    for (p, v) in rows {
        if v == f64::INFINITY {
            return f64::INFINITY;
        }
        total += to_f64(&p) * v;
    }
    total
}

/// Chain rule: the total relative entropy of an online pair equals the sum
/// of its next-block terms, sample by sample.
pub fn split_into_blocks(y: &FiniteDist, pair: &OnlinePair) -> Result<ReductionReport> {
    let (g, s) = (&pair.generator, &pair.simulator);
    let mut report = ReductionReport::new("chain-rule-split");
    let nb = nb_hardness_re(y, g, s)?;
    report.step("next-block-terms");
    let gen_side = g.output_joint();
    let sim_side = s.induced_joint(y, g.num_blocks())?;
    let total = rel_entropy_samples_extended(&gen_side, &sim_side)?;
    report.step("total-relative-entropy");
    let by_outcome: BTreeMap<&Outcome, &SampleValue> = nb.samples.iter().map(|r| (&r.outcome, &r.value)).collect();

    report.lhs_value = expectation(total.iter().map(|r| (r.prob.clone(), r.value.value)));
    report.rhs_value = nb.expectation;
    report.bound = report.lhs_value;
    report.param("m", g.num_blocks());
    report.check(Check::eq("KL total = Σ next-block terms", report.lhs_value, report.rhs_value));
    report.columns = vec!["total".into(), "sum of terms".into()];
    for r in &total {
        let n = by_outcome
            .get(&r.outcome)
            .ok_or_else(|| Error::Violated(format!("sample {} missing from the next-block sum", outcome_to_string(&r.outcome))))?;
        report.row(LedgerRow {
            outcome: outcome_to_string(&r.outcome),
            prob: r.prob.clone(),
            values: vec![r.value.value, n.value],
            deviation: deviation(&r.value, n),
            exact: Some(r.value.exact_eq(n)),
        });
    }
    Ok(report)
}

/// A copy of `g` with the lowest bit of its first nonempty table entry
/// flipped, used to drive the verifiers' failure paths.
pub fn tamper(g: &OnlineGenerator) -> Result<OnlineGenerator> {
    let i = g
        .block_widths()
        .iter()
        .position(|&w| w > 0)
        .ok_or_else(|| Error::InvalidGenerator("no block to tamper with".into()))?;
    let old = g.maps()[i][0];
    g.with_entry(i, 0, Block::new(old.value() ^ 1, old.width()))
}

/// One sample of the rejection-simulator decomposition.
struct Sample {
    prob: Prob,
    direct: SampleValue,
    nb: SampleValue,
    err: SampleValue,
}

struct Run {
    report: ReductionReport,
    samples: Vec<Sample>,
    nb_expectation: f64,
    direct_expectation: f64,
    err_expectation: f64,
}

fn max_instance_width(g: &OnlineGenerator) -> u8 {
    let m = g.num_blocks() - 1;
    g.block_widths()[..m].iter().copied().max().unwrap_or(0)
}

fn check_shape(rel: &Relation, yw: &FiniteDist, g: &OnlineGenerator) -> Result<usize> {
    if g.num_blocks() < 2 {
        return Err(Error::InvalidGenerator("need instance blocks and a witness block".into()));
    }
    let m = g.num_blocks() - 1;
    if g.seed_widths()[m] != 0 {
        return Err(Error::InvalidGenerator("the witness block must read no fresh seed".into()));
    }
    let inst: u32 = g.block_widths()[..m].iter().map(|&w| w as u32).sum();
    if yw.widths() != [rel.instance_width(), rel.witness_width()]
        || inst != rel.instance_width() as u32
        || g.block_widths()[m] != rel.witness_width()
    {
        return Err(Error::WidthMismatch(format!(
            "generator blocks {:?} against (Y, W) over {:?}",
            g.block_widths(),
            yw.widths()
        )));
    }
    Ok(m)
}

fn identity_run(rel: &Relation, yw: &FiniteDist, g: &OnlineGenerator, attempts: Attempts, fault: bool) -> Result<Run> {
    let m = check_shape(rel, yw, g)?;
    let mut report = ReductionReport::new("rejection-identity");
    report.param("T", attempts);
    report.param("m", m);
    report.param("ell", max_instance_width(g));
    report.param("fault_injection", fault);

    let inst_widths = g.block_widths()[..m].to_vec();
    let z = yw.pushforward(g.block_widths().to_vec(), |o| {
        let mut v = o[0].split(&inst_widths).expect("instance widths checked");
        v.push(o[1]);
        v
    })?;
    let nb = nb_inaccessible_re(&z, g)?;
    report.step("next-block-inaccessible-samples");

    let sim_target = if fault { tamper(g)? } else { g.clone() };
    let sim = rejection_simulator_exact(&RejectionConfig::new(sim_target, attempts)?);
    let offline = Simulator::from_online(&sim, m, yw.marginal(&[0]).support().map(|o| o[0]))?;
    let adv = AdversaryPair { generator: g.flatten(), simulator: offline };
    let direct = witness_hardness_re_extended(rel, yw, &adv)?;
    report.step("direct-witness-hardness-samples");
    let direct_by: BTreeMap<&Outcome, &SampleValue> = direct.samples.iter().map(|r| (&r.outcome, &r.value)).collect();

    let mut samples = Vec::with_capacity(nb.samples.len());
    for row in &nb.samples {
        let (r, zz) = row.outcome.split_at(m + 1);
        let mut succ = Prob::one();
        let mut packed = 0u64;
        for i in 0..m {
            let s = g.seed_widths()[i];
            let k = g.block_preimages(i, packed, zz[i]).len() as u64;
            succ *= success_probability(k, 1u64 << s, attempts);
            packed = (packed << s) | r[i].value();
        }
        let err = SampleValue::from_ratio(Prob::one(), succ);
        let key = vec![Block::concat(r)?, Block::concat(&zz[..m])?, zz[m]];
        let d = direct_by
            .get(&key)
            .ok_or_else(|| Error::Violated(format!("sample {} missing from the direct computation", outcome_to_string(&key))))?;
        samples.push(Sample { prob: row.prob.clone(), direct: (*d).clone(), nb: row.value.clone(), err });
    }
    report.step("rejection-error-samples");

    report.columns = vec!["direct".into(), "next-block".into(), "rejection error".into()];
    for (row, smp) in nb.samples.iter().zip(&samples) {
        let combined = smp.nb.add(&smp.err);
        report.row(LedgerRow {
            outcome: outcome_to_string(&row.outcome),
            prob: smp.prob.clone(),
            values: vec![smp.direct.value, smp.nb.value, smp.err.value],
            deviation: deviation(&smp.direct, &combined),
            exact: Some(smp.direct.exact_eq(&combined)),
        });
    }

    let err_expectation = expectation(samples.iter().map(|s| (s.prob.clone(), s.err.value)));
    let direct_expectation = expectation(samples.iter().map(|s| (s.prob.clone(), s.direct.value)));
    report.check(Check::eq(
        "E[direct] = next-block + E[rejection error]",
        direct_expectation,
        nb.expectation + err_expectation,
    ));

    // Closed-form error terms per node, through a separate code path.
    let mut term_sum = 0.0;
    for i in 0..m {
        let bits: u32 = g.seed_widths()[..i].iter().map(|&s| s as u32).sum();
        let node_mass = to_f64(&crate::probkit::pow2_inv(bits));
        let mut worst: Option<(f64, f64)> = None;
        for packed in 0..1u64 << bits {
            let prefix = Block::new(packed, bits as u8).split(&g.seed_widths()[..i])?;
            let term = rejection_error_term(g, i, &prefix, attempts);
            term_sum += node_mass * term;
            let base = (packed << g.seed_widths()[i]) as usize;
            let images: std::collections::BTreeSet<Block> =
                g.maps()[i][base..base + (1usize << g.seed_widths()[i])].iter().copied().collect();
            let bound = rejection_error_bound(images.len() as u64, attempts);
            if worst.is_none_or(|(b, t)| bound - term < b - t) {
                worst = Some((bound, term));
            }
        }
        if let Some((bound, term)) = worst {
            report.check(Check::ge(format!("block {i}: log(1+(L-1)/T) ≥ E[error]"), bound, term));
        }
    }
    report.check(Check::eq("E[error samples] = Σ closed-form error terms", err_expectation, term_sum));

    report.lhs_value = nb.expectation;
    report.rhs_value = direct_expectation;
    report.bound = nb.expectation + err_expectation;
    Ok(Run { report, samples, nb_expectation: nb.expectation, direct_expectation, err_expectation })
}

/// Per-sample identity between the direct witness hardness of
/// `(G̃, Sim^{G̃,T})` and the next-block inaccessible relative entropy of `G̃`
/// plus the rejection error, together with the per-node error bounds.
///
/// `yw` is the two-block joint `(Y, W)`; `g` has the instance split into
/// blocks followed by a seedless witness block. With `fault` the simulator is
/// built from a tampered copy of `g`, so the identity must fail.
pub fn bkl_identity(rel: &Relation, yw: &FiniteDist, g: &OnlineGenerator, attempts: Attempts, fault: bool) -> Result<ReductionReport> {
    Ok(identity_run(rel, yw, g, attempts, fault)?.report)
}

/// `⌈m·2^ℓ/(x·ln 2)⌉`.
pub(super) fn attempts_for(m: u32, ell: u8, x: f64) -> Result<u64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("attempt budget needs a positive slack, got {x}")));
    }
    let t = (m as f64 * (ell as f64).exp2() / (x * std::f64::consts::LN_2)).ceil();
    if !(t.is_finite() && t < 1e15) {
        return Err(Error::Domain(format!("attempt budget {t} out of range")));
    }
    Ok((t as u64).max(1))
}

/// Full pipeline for an online generator supported on `(Y, W)`:
///
/// - the per-sample identity at the budget's `T`;
/// - with `T = ⌈m·2^ℓ/(Δ′ ln 2)⌉`, expected error `≤ Δ′` and so witness
///   hardness `≤` next-block inaccessible relative entropy `+ Δ′`;
/// - with `T = ⌈m·2^ℓ/(δ′Δ′ ln 2)⌉`, `Pr[error > Δ′] ≤ δ′` and the quantile
///   at level `δ + δ′` of the next-block samples is at least the δ-quantile
///   of the direct samples minus `Δ′`.
///
/// The `ln 2` converts the natural-log bound `ln(1 + x) ≤ x` to bits.
pub fn bkl_pipeline(rel: &Relation, yw: &FiniteDist, g: &OnlineGenerator, budget: &ParamBudget) -> Result<ReductionReport> {
    budget.validate()?;
    let m = check_shape(rel, yw, g)? as u32;
    let ell = max_instance_width(g);
    if ell > budget.ell {
        return Err(Error::Domain(format!("instance blocks of {ell} bits exceed ℓ = {}", budget.ell)));
    }
    let ell = budget.ell;
    let slack = to_f64(&budget.delta_prime);
    let markov = to_f64(&budget.delta_markov);
    let t_exp = attempts_for(m, ell, slack)?;
    let t_min = attempts_for(m, ell, slack * markov)?;

    let base = identity_run(rel, yw, g, budget.attempts, false)?;
    let mut report = base.report;
    report.name = "bkl-pipeline".into();
    report.params.retain(|(k, _)| k != "ell");
    report.param("ell", ell);
    report.param("Delta_prime", format_rational(&budget.delta_prime));
    report.param("delta", format_rational(&budget.delta));
    report.param("delta_prime", format_rational(&budget.delta_markov));
    report.param("T_expectation", t_exp);
    report.param("T_min", t_min);
    report.step("expectation-form");

    let exp = identity_run(rel, yw, g, Attempts::Finite(t_exp), false)?;
    report.absorb(&format!("T={t_exp}"), exp.report);
    report.check(Check::ge("Δ′ ≥ E[rejection error]", slack, exp.err_expectation));
    report.check(Check::ge(
        "next-block + Δ′ ≥ witness hardness",
        exp.nb_expectation + slack,
        exp.direct_expectation,
    ));
    report.lhs_value = exp.nb_expectation;
    report.rhs_value = exp.direct_expectation;
    report.bound = exp.nb_expectation + slack;

    report.step("min-form");
    let min = identity_run(rel, yw, g, Attempts::Finite(t_min), false)?;
    let tail: Prob = min.samples.iter().filter(|s| s.err.value > slack).map(|s| s.prob.clone()).sum();
    let samples = min.samples;
    report.absorb(&format!("T={t_min}"), min.report);
    report.check(Check::ge_exact("δ′ ≥ Pr[error > Δ′]", &budget.delta_markov, &tail));
    let level = &budget.delta + &budget.delta_markov;
    if !budget.delta.is_zero() && level <= Prob::one() {
        let q_nb = quantile(samples.iter().map(|s| (&s.prob, &s.nb)), &level);
        let q_direct = quantile(samples.iter().map(|s| (&s.prob, &s.direct)), &budget.delta);
        report.check(Check::ge("Q_next-block(δ+δ′) ≥ Q_direct(δ) − Δ′", q_nb, q_direct - slack));
        report.param("Q_next_block", format_real(q_nb));
        report.param("Q_direct", format_real(q_direct));
    }
    Ok(report)
}

/// For flat `y`, the inaccessible entropy of `g` equals its next-block
/// inaccessible relative entropy, sample by sample and in expectation.
pub fn flat_equivalence(y: &FiniteDist, g: &OnlineGenerator) -> Result<ReductionReport> {
    if !y.is_flat() {
        return Err(Error::NotFlat(format!("target over {:?} has unequal masses", y.widths())));
    }
    let mut report = ReductionReport::new("flat-equivalence");
    let ie = inaccessible_entropy(y, g)?;
    report.step("entropy-gap-samples");
    let nb = nb_inaccessible_re(y, g)?;
    report.step("next-block-samples");
    report.lhs_value = ie.expectation;
    report.rhs_value = nb.expectation;
    report.bound = ie.expectation;
    report.check(Check::eq("inaccessible entropy = next-block inaccessible relative entropy", ie.expectation, nb.expectation));

    let profile = TargetProfile::new(y);
    let n = y.support_size() as u64;
    let h_sum: f64 = profile.block_entropies().iter().sum();
    report.check(Check::eq("Σ H(Y_i | Y_<i) = log |Supp|", h_sum, log2_ratio(&Prob::from_integer(n.into()))));
    let inv = Prob::one() / Prob::from_integer(n.into());
    let all_flat = y.support().all(|o| {
        let prod: Prob = (1..=o.len()).map(|i| profile.conditional(&o[..i]).cloned().unwrap_or_else(Prob::zero)).product();
        prod == inv
    });
    report.check(Check::eq_exact(
        "every support point: Π Pr[y_i | y_<i] = 1/|Supp|",
        &(if all_flat { inv.clone() } else { Prob::zero() }),
        &inv,
    ));

    let by_outcome: BTreeMap<&Outcome, &SampleValue> = nb.samples.iter().map(|r| (&r.outcome, &r.value)).collect();
    report.columns = vec!["entropy gap".into(), "next-block".into()];
    for r in &ie.samples {
        let v = by_outcome
            .get(&r.outcome)
            .ok_or_else(|| Error::Violated(format!("sample {} missing", outcome_to_string(&r.outcome))))?;
        report.row(LedgerRow {
            outcome: outcome_to_string(&r.outcome),
            prob: r.prob.clone(),
            values: vec![r.value.value, v.value],
            deviation: deviation(&r.value, v),
            exact: Some(r.value.exact_eq(v)),
        });
    }
    Ok(report)
}
