//! The `verify-all` suite: every verifier on one corpus instance.

use centlab::genkit::{FamilyMode, GeneratorFamily, OnlineGenerator};
use centlab::instances::{honest_generator, inversion_problem, CorpusEntry};
use centlab::notions::{AdversaryPair, OnlinePair};
use centlab::probkit::FiniteDist;
use centlab::reductions::{
    bkl_identity, bkl_pipeline, flat_equivalence, measure_identities, param_calculator, split_into_blocks,
    verify_success_lower_bound, verify_witness_bounds, ParamBudget, ReductionReport, Theorem,
};
use centlab::simkit::{convexity_check, OnlineSimulator, Simulator};
use serde::Serialize;

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteRow {
    pub instance: String,
    pub check: String,
    pub status: Status,
    pub checks: usize,
    #[serde(with = "centlab::serial::real")]
    pub max_deviation: f64,
    /// First failing check, or why the row was skipped.
    pub detail: String,
}

impl SuiteRow {
    fn from_report(instance: &str, check: &str, r: &ReductionReport) -> Self {
        SuiteRow {
            instance: instance.into(),
            check: check.into(),
            status: if r.holds { Status::Pass } else { Status::Fail },
            checks: r.checks.len() + r.decomposition.len(),
            max_deviation: r.max_deviation,
            detail: r.failures().next().map(|c| c.name.clone()).unwrap_or_default(),
        }
    }

    fn skip(instance: &str, check: &str, why: &str) -> Self {
        SuiteRow {
            instance: instance.into(),
            check: check.into(),
            status: Status::Skip,
            checks: 0,
            max_deviation: 0.0,
            detail: why.into(),
        }
    }
}

/// An in-support online generator for a bare joint: the first canonical
/// family member reading as many seed bits as each block has.
fn joint_generator(y: &FiniteDist) -> Result<OnlineGenerator, CliError> {
    let fam = GeneratorFamily::over_dist(y, y.widths().to_vec(), FamilyMode::Canonical)?;
    fam.iter().next().ok_or_else(|| CliError::Core(centlab::Error::InvalidGenerator("empty family".into())))
}

/// The generator the suite exercises: the honest one for functions.
pub fn default_generator(entry: &CorpusEntry) -> Result<OnlineGenerator, CliError> {
    match entry.function() {
        Some(f) => Ok(honest_generator(f, f.blocks())?),
        None => joint_generator(&entry.joint()),
    }
}

fn push(rows: &mut Vec<SuiteRow>, instance: &str, check: &str, r: centlab::Result<ReductionReport>) -> Result<(), CliError> {
    rows.push(SuiteRow::from_report(instance, check, &r?));
    Ok(())
}

/// One row per verifier on `entry`.
pub fn verify_instance(entry: &CorpusEntry, budget: &ParamBudget, fault: bool) -> Result<Vec<SuiteRow>, CliError> {
    let name = entry.name.as_str();
    let y = entry.joint();
    let mut rows = Vec::new();
    push(&mut rows, name, "information-measures", measure_identities(&y, &FiniteDist::uniform(y.widths().to_vec())))?;

    let g = default_generator(entry)?;
    let pair = OnlinePair { simulator: OnlineSimulator::posterior(&g), generator: g.clone() };
    push(&mut rows, name, "chain-rule", split_into_blocks(&y, &pair))?;

    if let Some(f) = entry.function() {
        let (rel, problem, yw) = inversion_problem(f);
        let flat = honest_generator(f, &[f.output_bits()])?.flatten();
        let simulator = Simulator::posterior(&flat, problem.instances().support().map(|o| o[0]))?;
        let adv = AdversaryPair { generator: flat, simulator };
        push(&mut rows, name, "kl-hard", verify_success_lower_bound(&problem, &adv))?;
        push(&mut rows, name, "witness-kl-hard", verify_witness_bounds(&rel, &yw, &adv))?;
        // ℓ is raised to the widest instance block when the budget is smaller
        let mut b = budget.clone();
        b.ell = b.ell.max(f.blocks().iter().copied().max().unwrap_or(0));
        let bkl = if fault { bkl_identity(&rel, &yw, &g, b.attempts, true) } else { bkl_pipeline(&rel, &yw, &g, &b) };
        push(&mut rows, name, "bkl-reduction", bkl)?;
    } else {
        for check in ["kl-hard", "witness-kl-hard", "bkl-reduction"] {
            rows.push(SuiteRow::skip(name, check, "needs a function instance"));
        }
    }

    if y.is_flat() {
        push(&mut rows, name, "flat-inacc", flat_equivalence(&y, &g))?;
    } else {
        rows.push(SuiteRow::skip(name, "flat-inacc", "target is not flat"));
    }
    Ok(rows)
}

/// Instance-free rows: rejection-error convexity and the parameter
/// calculator on the budget.
pub fn verify_global(budget: &ParamBudget) -> Vec<SuiteRow> {
    let bad: Vec<u64> = (1..=64).filter(|&t| !convexity_check(t, 1001)).collect();
    let mut rows = vec![SuiteRow {
        instance: "-".into(),
        check: "rejection-convexity".into(),
        status: if bad.is_empty() { Status::Pass } else { Status::Fail },
        checks: 64,
        max_deviation: 0.0,
        detail: if bad.is_empty() { String::new() } else { format!("fails at t = {bad:?}") },
    }];
    let errors: Vec<String> =
        Theorem::ALL.iter().filter_map(|&t| param_calculator(budget, t).err().map(|e| format!("{}: {e}", t.name()))).collect();
    rows.push(SuiteRow {
        instance: "-".into(),
        check: "params".into(),
        status: if errors.is_empty() { Status::Pass } else { Status::Skip },
        checks: Theorem::ALL.len(),
        max_deviation: 0.0,
        detail: errors.join("; "),
    });
    rows
}
