use std::cmp::Ordering;
use std::collections::BTreeMap;

use num_traits::{One, Zero};

use super::solver::DELTA_GRID;
use super::{Check, LedgerRow, ReductionReport};
use crate::error::{Error, Result};
use crate::probkit::{
    cond_entropy, cond_entropy_samples, cond_rel_entropy, cond_rel_entropy_samples, dp_check, entropy, mass_at_most,
    min_rel_entropy, outcome_to_string, quantile_sample, ratio, rel_entropy, rel_entropy_samples, Block, CondQuery,
    FiniteDist, Outcome, Prob, SampleRow, SampleValue,
};
use crate::serial::format_rational;

fn prefix(d: &FiniteDist, len: usize) -> FiniteDist {
    d.marginal(&(0..len).collect::<Vec<_>>())
}

/// Sample-wise sums of the per-block conditional terms, keyed by the full
/// outcome; block `i` conditions on blocks `< i`.
fn chain_terms(
    a: &FiniteDist,
    mut term: impl FnMut(&CondQuery, usize) -> Result<(f64, Vec<SampleRow>)>,
) -> Result<(f64, BTreeMap<Outcome, SampleValue>)> {
    let mut total = 0.0;
    let mut sums: BTreeMap<Outcome, SampleValue> = a.support().map(|o| (o.clone(), SampleValue::zero())).collect();
    for i in 0..a.arity() {
        let q = CondQuery::new(prefix(a, i + 1), (0..i).collect())?;
        let (e, rows) = term(&q, i)?;
        total += e;
        let by_prefix: BTreeMap<&[Block], &SampleValue> = rows.iter().map(|r| (&r.outcome[..], &r.value)).collect();
        for (o, acc) in sums.iter_mut() {
            *acc = acc.add(by_prefix[&o[..=i]]);
        }
    }
    Ok((total, sums))
}

fn parity(o: &Outcome) -> Outcome {
    let ones: u32 = o.iter().map(|b| b.value().count_ones()).sum();
    vec![Block::new((ones & 1) as u64, 1)]
}

/// Chain rules (sample and expectation forms) for entropy and relative
/// entropy, nonnegativity, data processing under projections and parity, and
/// the quantile characterization of δ-min relative entropy, for `a` against
/// a reference `b` with `Supp(a) ⊆ Supp(b)`.
pub fn measure_identities(a: &FiniteDist, b: &FiniteDist) -> Result<ReductionReport> {
    if !a.support_within(b) {
        return Err(Error::SupportViolation(format!("reference misses part of Supp over {:?}", a.widths())));
    }
    let mut report = ReductionReport::new("information-measures");
    report.param("arity", a.arity());
    report.param("support", a.support_size());

    let h = entropy(a);
    let (h_chain, h_sums) = chain_terms(a, |q, _| Ok((cond_entropy(q), cond_entropy_samples(q))))?;
    report.step("entropy-chain");
    report.check(Check::eq("H(A) = Σ H(A_i | A_<i)", h, h_chain));
    report.check(Check::ge("H(A) ≥ 0", h, 0.0));

    let kl = rel_entropy(a, b)?;
    let kl_rows = rel_entropy_samples(a, b)?;
    let mut term_errs = Ok(());
    let (kl_chain, kl_sums) = chain_terms(a, |q, i| {
        let qb = CondQuery::new(prefix(b, i + 1), (0..i).collect())?;
        let e = cond_rel_entropy(q, &qb)?;
        if e < -crate::TOLERANCE {
            term_errs = Err(e);
        }
        Ok((e, cond_rel_entropy_samples(q, &qb)?))
    })?;
    report.step("relative-entropy-chain");
    report.check(Check::eq("KL(A‖B) = Σ KL(A_i | A_<i ‖ B_i | B_<i)", kl, kl_chain));
    report.check(Check::ge("KL(A‖B) ≥ 0", kl, 0.0));
    report.check(Check::ge("every conditional KL term ≥ 0", term_errs.err().unwrap_or(0.0), 0.0));

    report.columns = vec!["surprise".into(), "Σ conditional surprise".into(), "log ratio".into(), "Σ conditional log ratio".into()];
    for r in &kl_rows {
        let hs = SampleValue::from_ratio(Prob::one(), r.prob.clone());
        let hc = &h_sums[&r.outcome];
        let kc = &kl_sums[&r.outcome];
        let dev = (hs.value - hc.value).abs().max((r.value.value - kc.value).abs());
        report.row(LedgerRow {
            outcome: outcome_to_string(&r.outcome),
            prob: r.prob.clone(),
            values: vec![hs.value, hc.value, r.value.value, kc.value],
            deviation: dev,
            exact: Some(hs.exact_eq(hc) && r.value.exact_eq(kc)),
        });
    }

    for i in 0..a.arity() {
        let w = a.widths()[i];
        let (before, after) = dp_check(a, b, vec![w], |o| vec![o[i]])?;
        report.check(Check::ge(format!("KL(A‖B) ≥ KL(A_{i}‖B_{i})"), before, after));
    }
    let (before, after) = dp_check(a, b, vec![1], parity)?;
    report.check(Check::ge("KL(A‖B) ≥ KL(parity(A)‖parity(B))", before, after));
    report.step("data-processing");

    for &(n, d) in DELTA_GRID.iter() {
        let delta = ratio(n, d);
        let tag = format_rational(&delta);
        let v = quantile_sample(kl_rows.iter().map(|r| (&r.prob, &r.value)), &delta).expect("positive level");
        let at_most = mass_at_most(kl_rows.iter().map(|r| (&r.prob, &r.value)), v.value);
        let below: Prob = kl_rows.iter().filter(|r| r.value.cmp_exact(v) == Ordering::Less).map(|r| r.prob.clone()).sum();
        report.check(Check::ge_exact(format!("Pr[sample ≤ Q({tag})] ≥ {tag}"), &at_most, &delta));
        let mut strict = Check::ge_exact(format!("{tag} > Pr[sample < Q({tag})]"), &delta, &below);
        strict.holds = below < delta || delta.is_zero();
        strict.exact = Some(strict.holds);
        report.check(strict);
        report.check(Check::eq(format!("min relative entropy at {tag} = Q({tag})"), min_rel_entropy(a, b, &delta)?, v.value));
    }
    report.step("quantile-characterization");
    report.lhs_value = kl;
    report.rhs_value = kl_chain;
    report.bound = 0.0;
    Ok(report)
}
