//! Constructive reductions and the verifiers that check each proved
//! inequality or identity on concrete objects.
//!
//! Every verifier returns a [`ReductionReport`]. A failed inequality is not
//! an error: it is reported with `holds = false` and the failing check.

mod identities;
mod params;
mod pipeline;
mod search;
mod solver;

use serde::Serialize;

pub use identities::measure_identities;
pub use params::{param_calculator, Conclusion, ParamBudget, Quantity, Theorem};
pub use pipeline::{bkl_identity, bkl_pipeline, flat_equivalence, split_into_blocks, tamper};
pub use search::{brute_force_best, Adversary, BruteForceResult, RandomSearch, SearchSpec, SearchTarget};
pub use solver::{
    adversary_from_pair, verify_success_lower_bound, verify_witness_bounds, Solver, DELTA_GRID, FORBIDDEN_STEP,
};

use crate::probkit::{Prob, TOLERANCE};
use crate::serial;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Comparison {
    /// `lhs ≥ rhs − tol`
    Ge,
    /// `|lhs − rhs| ≤ tol`
    Eq,
}

/// One inequality or identity instance.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub comparison: Comparison,
    #[serde(with = "serial::real")]
    pub lhs: f64,
    #[serde(with = "serial::real")]
    pub rhs: f64,
    /// Set when the comparison was decided on rationals.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact: Option<bool>,
    pub holds: bool,
    /// Amount by which the check misses (0 when it holds with margin), or
    /// `|lhs − rhs|` for identities.
    #[serde(with = "serial::real")]
    pub deviation: f64,
}

impl Check {
    pub fn ge(name: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        let holds = lhs >= rhs - TOLERANCE || lhs == f64::INFINITY || rhs == f64::NEG_INFINITY;
        let deviation = if holds { 0.0 } else { rhs - lhs };
        Check { name: name.into(), comparison: Comparison::Ge, lhs, rhs, exact: None, holds, deviation }
    }

    pub fn eq(name: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        let deviation = if lhs == rhs { 0.0 } else { (lhs - rhs).abs() };
        let holds = deviation <= TOLERANCE;
        Check { name: name.into(), comparison: Comparison::Eq, lhs, rhs, exact: None, holds, deviation }
    }

    /// An exact comparison of rationals, shown as floats.
    pub fn ge_exact(name: impl Into<String>, lhs: &Prob, rhs: &Prob) -> Self {
        let mut c = Check::ge(name, crate::probkit::to_f64(lhs), crate::probkit::to_f64(rhs));
        c.exact = Some(lhs >= rhs);
        c.holds = lhs >= rhs;
        c.deviation = if c.holds { 0.0 } else { crate::probkit::to_f64(&(rhs - lhs)) };
        c
    }

    pub fn eq_exact(name: impl Into<String>, lhs: &Prob, rhs: &Prob) -> Self {
        let mut c = Check::eq(name, crate::probkit::to_f64(lhs), crate::probkit::to_f64(rhs));
        c.exact = Some(lhs == rhs);
        c.holds = lhs == rhs;
        c
    }
}

/// One sample of a per-sample decomposition.
#[derive(Clone, Debug, Serialize)]
pub struct LedgerRow {
    pub outcome: String,
    #[serde(with = "serial::rational")]
    pub prob: Prob,
    /// Values in the order of [`ReductionReport::columns`].
    #[serde(with = "serial::real_vec")]
    pub values: Vec<f64>,
    #[serde(with = "serial::real")]
    pub deviation: f64,
    /// Whether the identity held exactly on rationals, where one is checked.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ReductionReport {
    pub name: String,
    /// Hypothesis-side quantity.
    #[serde(with = "serial::real")]
    pub lhs_value: f64,
    /// Conclusion-side quantity.
    #[serde(with = "serial::real")]
    pub rhs_value: f64,
    /// The bound the conclusion is guaranteed to meet.
    #[serde(with = "serial::real")]
    pub bound: f64,
    pub holds: bool,
    #[serde(with = "serial::real")]
    pub max_deviation: f64,
    /// Parameters used, as `(name, value)` text.
    pub params: Vec<(String, String)>,
    /// The computation path, in order.
    pub method: Vec<String>,
    pub checks: Vec<Check>,
    pub columns: Vec<String>,
    pub decomposition: Vec<LedgerRow>,
}

impl ReductionReport {
    fn new(name: &str) -> Self {
        ReductionReport {
            name: name.into(),
            lhs_value: 0.0,
            rhs_value: 0.0,
            bound: 0.0,
            holds: true,
            max_deviation: 0.0,
            params: Vec::new(),
            method: Vec::new(),
            checks: Vec::new(),
            columns: Vec::new(),
            decomposition: Vec::new(),
        }
    }

    fn param(&mut self, name: &str, value: impl ToString) {
        self.params.push((name.into(), value.to_string()));
    }

    fn step(&mut self, s: &str) {
        self.method.push(s.into());
    }

    fn check(&mut self, c: Check) {
        self.holds &= c.holds;
        if c.deviation.is_nan() || c.deviation > self.max_deviation {
            self.max_deviation = c.deviation;
        }
        self.checks.push(c);
    }

    fn row(&mut self, r: LedgerRow) {
        if r.deviation.is_nan() || r.deviation > self.max_deviation {
            self.max_deviation = r.deviation;
        }
        if r.exact == Some(false) || !(r.deviation <= TOLERANCE) {
            self.holds = false;
        }
        self.decomposition.push(r);
    }

    /// Checks that failed.
    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.holds)
    }

    pub fn find(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Merge another report's checks and ledger, prefixing check names.
    fn absorb(&mut self, prefix: &str, other: ReductionReport) {
        for c in other.checks {
            let mut c = c;
            c.name = format!("{prefix}: {}", c.name);
            self.check(c);
        }
        if !other.holds {
            self.holds = false;
        }
        self.max_deviation = self.max_deviation.max(other.max_deviation);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probkit::ratio;

    #[test]
    fn check_semantics() {
        assert!(Check::ge("a", 1.0, 1.0 + 1e-12).holds);
        assert!(!Check::ge("a", 1.0, 1.1).holds);
        assert!(Check::ge("a", 0.0, f64::NEG_INFINITY).holds);
        assert!(Check::ge("a", f64::INFINITY, f64::INFINITY).holds);
        assert!(Check::eq("a", f64::INFINITY, f64::INFINITY).holds);
        assert!(!Check::eq("a", f64::INFINITY, 1.0).holds);
        assert!(!Check::ge_exact("a", &ratio(1, 3), &ratio(1, 2)).holds);
        assert!(Check::eq_exact("a", &ratio(2, 4), &ratio(1, 2)).holds);
    }

    #[test]
    fn report_tracks_failures() {
        let mut r = ReductionReport::new("t");
        r.check(Check::ge("ok", 2.0, 1.0));
        assert!(r.holds);
        r.check(Check::ge("bad", 1.0, 2.0));
        assert!(!r.holds);
        assert_eq!(r.max_deviation, 1.0);
        assert_eq!(r.failures().count(), 1);
    }
}
