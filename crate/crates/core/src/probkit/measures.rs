use std::collections::BTreeMap;

use num_traits::{One, Zero};

use super::block::{outcome_to_string, Block, Outcome};
use super::dist::FiniteDist;
use super::logs::SampleValue;
use super::Prob;
use crate::error::{Error, Result};

/// A joint distribution with a designated set of conditioning coordinates.
///
/// The remaining coordinates (in increasing order) form the conditioned
/// variable, so `joint` over `(A, X)` with `condition = X`'s positions
/// describes `A | X`.
#[derive(Clone, Debug)]
pub struct CondQuery {
    pub joint: FiniteDist,
    pub condition: Vec<usize>,
}

impl CondQuery {
    pub fn new(joint: FiniteDist, condition: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; joint.arity()];
        for &p in &condition {
            if p >= joint.arity() || seen[p] {
                return Err(Error::WidthMismatch(format!(
                    "condition positions {condition:?} invalid for arity {}",
                    joint.arity()
                )));
            }
            seen[p] = true;
        }
        Ok(CondQuery { joint, condition })
    }

    fn condition_marginal(&self) -> BTreeMap<Outcome, Prob> {
        let mut acc: BTreeMap<Outcome, Prob> = BTreeMap::new();
        for (o, p) in self.joint.entries() {
            *acc.entry(self.project(o)).or_insert_with(Prob::zero) += p;
        }
        acc
    }

    fn project(&self, o: &[Block]) -> Outcome {
        self.condition.iter().map(|&i| o[i]).collect()
    }

    /// `Pr[A = a | X = x]` for every `(a, x)` in the support.
    pub fn conditionals(&self) -> Vec<(&Outcome, &Prob, Prob)> {
        let marg = self.condition_marginal();
        self.joint
            .entries()
            .iter()
            .map(|(o, p)| (o, p, p / &marg[&self.project(o)]))
            .collect()
    }
}

/// One row of a per-sample decomposition.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleRow {
    pub outcome: Outcome,
    pub prob: Prob,
    pub value: SampleValue,
}

fn weighted_mean(rows: &[SampleRow]) -> f64 {
    rows.iter()
        .map(|r| num_traits::ToPrimitive::to_f64(&r.prob).unwrap() * r.value.value)
        .sum()
}

pub fn entropy(d: &FiniteDist) -> f64 {
    weighted_mean(&entropy_samples(d))
}

fn entropy_samples(d: &FiniteDist) -> Vec<SampleRow> {
    d.entries()
        .iter()
        .map(|(o, p)| SampleRow {
            outcome: o.clone(),
            prob: p.clone(),
            value: SampleValue::from_ratio(Prob::one(), p.clone()),
        })
        .collect()
}

/// Surprise `log2(1 / Pr[d = x])`.
pub fn sample_entropy(d: &FiniteDist, x: &[Block]) -> Result<SampleValue> {
    match d.prob_ref(x) {
        Some(p) => Ok(SampleValue::from_ratio(Prob::one(), p.clone())),
        None => Err(Error::OutOfSupport(outcome_to_string(x))),
    }
}

pub fn cond_entropy_samples(q: &CondQuery) -> Vec<SampleRow> {
    q.conditionals()
        .into_iter()
        .map(|(o, p, c)| SampleRow {
            outcome: o.clone(),
            prob: p.clone(),
            value: SampleValue::from_ratio(Prob::one(), c),
        })
        .collect()
}

pub fn cond_entropy(q: &CondQuery) -> f64 {
    weighted_mean(&cond_entropy_samples(q))
}

/// Per-sample `log2(Pr[a = x] / Pr[b = x])` over `Supp(a)`.
pub fn rel_entropy_samples(a: &FiniteDist, b: &FiniteDist) -> Result<Vec<SampleRow>> {
    check_same_shape(a, b)?;
    a.entries()
        .iter()
        .map(|(o, p)| match b.prob_ref(o) {
            Some(q) => Ok(SampleRow {
                outcome: o.clone(),
                prob: p.clone(),
                value: SampleValue::from_ratio(p.clone(), q.clone()),
            }),
            None => Err(Error::SupportViolation(outcome_to_string(o))),
        })
        .collect()
}

/// Like [`rel_entropy_samples`] but support violations become `+∞` samples.
pub fn rel_entropy_samples_extended(a: &FiniteDist, b: &FiniteDist) -> Result<Vec<SampleRow>> {
    check_same_shape(a, b)?;
    Ok(a.entries()
        .iter()
        .map(|(o, p)| SampleRow {
            outcome: o.clone(),
            prob: p.clone(),
            value: match b.prob_ref(o) {
                Some(q) => SampleValue::from_ratio(p.clone(), q.clone()),
                None => SampleValue::infinite(),
            },
        })
        .collect())
}

fn check_same_shape(a: &FiniteDist, b: &FiniteDist) -> Result<()> {
    if a.widths() != b.widths() {
        return Err(Error::WidthMismatch(format!(
            "distributions over widths {:?} and {:?}",
            a.widths(),
            b.widths()
        )));
    }
    Ok(())
}

pub fn rel_entropy(a: &FiniteDist, b: &FiniteDist) -> Result<f64> {
    Ok(weighted_mean(&rel_entropy_samples(a, b)?))
}

/// Sample relative entropy at a single outcome. Only `x` itself is checked
/// against the supports.
pub fn sample_rel_entropy(a: &FiniteDist, b: &FiniteDist, x: &[Block]) -> Result<SampleValue> {
    check_same_shape(a, b)?;
    let p = a.prob_ref(x).ok_or_else(|| Error::OutOfSupport(outcome_to_string(x)))?;
    let q = b.prob_ref(x).ok_or_else(|| Error::SupportViolation(outcome_to_string(x)))?;
    Ok(SampleValue::from_ratio(p.clone(), q.clone()))
}

/// Per-sample conditional relative entropy over `Supp(aq.joint)`.
pub fn cond_rel_entropy_samples(aq: &CondQuery, bq: &CondQuery) -> Result<Vec<SampleRow>> {
    check_same_shape(&aq.joint, &bq.joint)?;
    if aq.condition != bq.condition {
        return Err(Error::WidthMismatch(format!(
            "conditioning positions differ: {:?} vs {:?}",
            aq.condition, bq.condition
        )));
    }
    let b_marg = bq.condition_marginal();
    aq.conditionals()
        .into_iter()
        .map(|(o, p, pa)| {
            let violation = || Error::SupportViolation(outcome_to_string(o));
            let joint_b = bq.joint.prob_ref(o).ok_or_else(violation)?;
            let marg_b = b_marg.get(&bq.project(o)).ok_or_else(violation)?;
            Ok(SampleRow {
                outcome: o.clone(),
                prob: p.clone(),
                value: SampleValue::from_ratio(pa, joint_b / marg_b),
            })
        })
        .collect()
}

pub fn cond_rel_entropy(aq: &CondQuery, bq: &CondQuery) -> Result<f64> {
    Ok(weighted_mean(&cond_rel_entropy_samples(aq, bq)?))
}

/// Quantile of level `delta`: the smallest sample value `v` with
/// `Pr[value ≤ v] ≥ delta`, computed with exact cumulative masses.
///
/// Level 0 is satisfied by every real number, so the result is `-∞`.
pub fn quantile<'a>(rows: impl IntoIterator<Item = (&'a Prob, &'a SampleValue)>, delta: &Prob) -> f64 {
    quantile_sample(rows, delta).map_or(f64::NEG_INFINITY, |v| v.value)
}

/// The sample attaining [`quantile`], or `None` at level 0 (or for no rows).
pub fn quantile_sample<'a>(rows: impl IntoIterator<Item = (&'a Prob, &'a SampleValue)>, delta: &Prob) -> Option<&'a SampleValue> {
    if delta.is_zero() {
        return None;
    }
    let mut sorted: Vec<(&Prob, &SampleValue)> = rows.into_iter().collect();
    sorted.sort_by(|a, b| a.1.cmp_exact(b.1));
    let mut cum = Prob::zero();
    for (i, &(p, v)) in sorted.iter().enumerate() {
        cum += p;
        // ties are absorbed before testing the level
        let tie_follows = sorted.get(i + 1).is_some_and(|(_, w)| w.exact_eq(v));
        if !tie_follows && &cum >= delta {
            return Some(v);
        }
    }
    sorted.last().map(|&(_, v)| v)
}

/// `Pr[value ≤ threshold]` over weighted samples.
pub fn mass_at_most<'a>(rows: impl IntoIterator<Item = (&'a Prob, &'a SampleValue)>, threshold: f64) -> Prob {
    rows.into_iter()
        .filter(|(_, v)| v.value <= threshold)
        .map(|(p, _)| p.clone())
        .sum()
}

/// δ-min relative entropy: quantile of level `delta` of the sample relative
/// entropy under `a`.
pub fn min_rel_entropy(a: &FiniteDist, b: &FiniteDist, delta: &Prob) -> Result<f64> {
    if *delta < Prob::zero() || *delta > Prob::one() {
        return Err(Error::Domain(format!("quantile level {delta} outside [0,1]")));
    }
    let rows = rel_entropy_samples(a, b)?;
    Ok(quantile(rows.iter().map(|r| (&r.prob, &r.value)), delta))
}

/// Returns `(KL(a‖b), KL(f(a)‖f(b)))`; errors if the second exceeds the first
/// beyond tolerance.
pub fn dp_check(
    a: &FiniteDist,
    b: &FiniteDist,
    widths: Vec<u8>,
    f: impl Fn(&Outcome) -> Outcome,
) -> Result<(f64, f64)> {
    let before = rel_entropy(a, b)?;
    let fa = a.pushforward(widths.clone(), &f)?;
    let fb = b.pushforward(widths, &f)?;
    let after = rel_entropy(&fa, &fb)?;
    if after > before + super::TOLERANCE {
        return Err(Error::Violated(format!(
            "data processing: KL(f(a)‖f(b)) = {after} > KL(a‖b) = {before}"
        )));
    }
    Ok((before, after))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probkit::block::outcome;
    use crate::probkit::dist::ratio;

    fn bern(n: u64, d: u64) -> FiniteDist {
        FiniteDist::bernoulli(ratio(n, d)).unwrap()
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-9
    }

    // Oracle values below were evaluated independently with mpmath (50 digits):
    //   2 - 0.75*log2(3)   = 0.8112781244591328
    //   log2(4/3)          = 0.4150374992788438
    //   1 - 0.5*log2(3)    = 0.2075187496394219
    //   log2(2/3)          = -0.5849625007211562

    #[test]
    fn entropy_examples() {
        let point = FiniteDist::point(vec![1], outcome(&["0"])).unwrap();
        assert_eq!(entropy(&point), 0.0);
        assert!(close(entropy(&FiniteDist::uniform(vec![3])), 3.0));
        assert!(close(entropy(&bern(1, 4)), 0.8112781244591328));
    }

    #[test]
    fn sample_entropy_examples() {
        let u = FiniteDist::uniform(vec![2]);
        assert_eq!(sample_entropy(&u, &outcome(&["01"])).unwrap().value, 2.0);
        let b = bern(1, 4);
        assert_eq!(sample_entropy(&b, &outcome(&["1"])).unwrap().value, 2.0);
        assert!(close(sample_entropy(&b, &outcome(&["0"])).unwrap().value, 0.4150374992788438));
        let point = FiniteDist::point(vec![1], outcome(&["0"])).unwrap();
        assert!(matches!(sample_entropy(&point, &outcome(&["1"])), Err(Error::OutOfSupport(_))));
    }

    #[test]
    fn cond_entropy_examples() {
        let copy = FiniteDist::uniform_over(vec![1, 1], [outcome(&["0", "0"]), outcome(&["1", "1"])]).unwrap();
        assert_eq!(cond_entropy(&CondQuery::new(copy, vec![1]).unwrap()), 0.0);
        let indep = FiniteDist::uniform(vec![1, 1]);
        assert!(close(cond_entropy(&CondQuery::new(indep, vec![1]).unwrap()), 1.0));
        let tri = FiniteDist::uniform_over(
            vec![1, 1],
            [outcome(&["0", "0"]), outcome(&["0", "1"]), outcome(&["1", "1"])],
        )
        .unwrap();
        // x=0 forces a=0; x=1 (mass 2/3) leaves a uniform.
        assert!(close(cond_entropy(&CondQuery::new(tri, vec![1]).unwrap()), 2.0 / 3.0));
    }

    #[test]
    fn rel_entropy_examples() {
        let b = bern(1, 4);
        assert_eq!(rel_entropy(&b, &b).unwrap(), 0.0);
        assert!(close(rel_entropy(&bern(1, 2), &b).unwrap(), 0.2075187496394219));
        let point = FiniteDist::point(vec![2], outcome(&["00"])).unwrap();
        assert_eq!(rel_entropy(&point, &FiniteDist::uniform(vec![2])).unwrap(), 2.0);
        assert!(matches!(
            rel_entropy(&FiniteDist::uniform(vec![2]), &point),
            Err(Error::SupportViolation(_))
        ));
    }

    #[test]
    fn sample_rel_entropy_examples() {
        let (a, b) = (bern(1, 2), bern(1, 4));
        assert_eq!(sample_rel_entropy(&a, &a, &outcome(&["1"])).unwrap().value, 0.0);
        assert_eq!(sample_rel_entropy(&a, &b, &outcome(&["1"])).unwrap().value, 1.0);
        let neg = sample_rel_entropy(&a, &b, &outcome(&["0"])).unwrap();
        assert!(close(neg.value, -0.5849625007211562));
        assert_eq!(neg.exact, Some((ratio(1, 2), ratio(3, 4))));
        let point = FiniteDist::point(vec![1], outcome(&["0"])).unwrap();
        assert!(matches!(
            sample_rel_entropy(&a, &point, &outcome(&["1"])),
            Err(Error::SupportViolation(_))
        ));
    }

    #[test]
    fn cond_rel_entropy_examples() {
        // (A, X): X uniform, A | X uniform bit  vs  (B, Y): Y uniform, B | Y ~ Bern(1/4)
        let uniform_x = FiniteDist::uniform(vec![1]);
        let aq = CondQuery::new(bern(1, 2).product(&uniform_x), vec![1]).unwrap();
        let bq = CondQuery::new(bern(1, 4).product(&uniform_x), vec![1]).unwrap();
        assert_eq!(cond_rel_entropy(&aq, &aq).unwrap(), 0.0);
        let v = cond_rel_entropy(&aq, &bq).unwrap();
        assert!(close(v, 0.2075187496394219));
        // chain rule on the same pair
        let total = rel_entropy(&aq.joint, &bq.joint).unwrap();
        let marg = rel_entropy(&aq.joint.marginal(&[1]), &bq.joint.marginal(&[1])).unwrap();
        assert!(close(total, v + marg));
    }

    #[test]
    fn min_rel_entropy_examples() {
        let (a, b) = (bern(1, 2), bern(1, 4));
        assert_eq!(min_rel_entropy(&b, &b, &ratio(1, 3)).unwrap(), 0.0);
        assert!(close(min_rel_entropy(&a, &b, &ratio(1, 2)).unwrap(), -0.5849625007211562));
        assert_eq!(min_rel_entropy(&a, &b, &ratio(3, 4)).unwrap(), 1.0);
        assert_eq!(min_rel_entropy(&a, &b, &Prob::one()).unwrap(), 1.0);
        assert_eq!(min_rel_entropy(&a, &b, &Prob::zero()).unwrap(), f64::NEG_INFINITY);
        assert!(min_rel_entropy(&a, &b, &ratio(3, 2)).is_err());
    }

    #[test]
    fn quantile_absorbs_ties() {
        let v = SampleValue::zero();
        let w = SampleValue::from_ratio(ratio(2, 1), Prob::one());
        let rows = [(ratio(1, 4), v.clone()), (ratio(1, 4), v.clone()), (ratio(1, 2), w)];
        assert_eq!(quantile(rows.iter().map(|(p, v)| (p, v)), &ratio(1, 2)), 0.0);
        assert_eq!(quantile(rows.iter().map(|(p, v)| (p, v)), &ratio(1, 4)), 0.0);
        assert_eq!(quantile(rows.iter().map(|(p, v)| (p, v)), &ratio(3, 4)), 1.0);
    }

    #[test]
    fn dp_check_examples() {
        let a = FiniteDist::uniform_over(vec![2], [outcome(&["00"]), outcome(&["01"]), outcome(&["11"])]).unwrap();
        let b = FiniteDist::uniform(vec![2]);
        let flip = |o: &Outcome| vec![Block::new(o[0].value() ^ 0b11, 2)];
        let (x, y) = dp_check(&a, &b, vec![2], flip).unwrap();
        assert!(close(x, y));
        let constant = |_: &Outcome| vec![Block::new(0, 1)];
        let (x, y) = dp_check(&a, &b, vec![1], constant).unwrap();
        assert!(x > 0.0);
        assert_eq!(y, 0.0);
    }
}
