//! Experiment runner behind the `centlab` binary.
//!
//! Each command turns an [`ExperimentConfig`] into an [`Outcome`]: a JSON
//! report (with the config and its hash embedded) plus CSV tables. Reports
//! contain no timestamps or paths, so identical configs give byte-identical
//! output.

pub mod config;
pub mod suite;

use std::path::Path;

use centlab::genkit::OnlineGenerator;
use centlab::instances::{honest_generator, inversion_problem, CorpusEntry, ToyFunction};
use centlab::notions::{
    hardness_re, inaccessible_entropy, nb_hardness_re, nb_inaccessible_re, relative_pseudoentropy, witness_hardness_re,
    AdversaryPair, Notion, NotionValue,
};
use centlab::probkit::{outcome_to_string, to_f64};
use centlab::reductions::{bkl_identity, brute_force_best, param_calculator, SearchTarget, Theorem};
use centlab::serial::{content_hash, format_rational, format_real, GeneratorDoc};
use centlab::simkit::{Attempts, OnlineSimulator, Simulator};
use serde::Serialize;
use serde_json::json;

pub use config::{ExperimentConfig, Format};
use suite::{Status, SuiteRow};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] centlab::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// 1 for invalid input, 2 for a violated identity, 3 for an exceeded
    /// enumeration budget.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(centlab::Error::BudgetExceeded { .. }) => 3,
            CliError::Core(centlab::Error::Violated(_)) => 2,
            _ => 1,
        }
    }
}

pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(name: &str, header: &[&str]) -> Self {
        Table { name: name.into(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("csv of utf-8 strings"))
    }
}

pub struct Outcome {
    pub report: serde_json::Value,
    pub tables: Vec<Table>,
    /// A verifier reported a violated identity or inequality.
    pub failed: bool,
}

impl Outcome {
    pub fn exit_code(&self) -> u8 {
        if self.failed {
            2
        } else {
            0
        }
    }

    pub fn json(&self) -> String {
        serde_json::to_string_pretty(&self.report).expect("json values serialize") + "\n"
    }

    /// Write `report.json` and one CSV per table into `dir`, as `format`
    /// asks.
    pub fn write(&self, dir: &Path, format: Format) -> Result<(), CliError> {
        std::fs::create_dir_all(dir)?;
        if format.json() {
            std::fs::write(dir.join("report.json"), self.json())?;
        }
        if format.csv() {
            for t in &self.tables {
                std::fs::write(dir.join(format!("{}.csv", t.name)), t.to_csv()?)?;
            }
        }
        Ok(())
    }
}

/// Hash of the config with the output section cleared, so the same
/// experiment hashes the same wherever it is written.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let mut c = cfg.clone();
    c.output = Default::default();
    content_hash(&c)
}

fn envelope(command: &str, cfg: &ExperimentConfig, result: impl Serialize) -> Result<serde_json::Value, CliError> {
    let mut c = cfg.clone();
    c.output = Default::default();
    Ok(json!({
        "command": command,
        "config_hash": config_hash(cfg),
        "config": serde_json::to_value(&c)?,
        "result": serde_json::to_value(result)?,
    }))
}

fn function_of(entry: &CorpusEntry) -> Result<&ToyFunction, CliError> {
    entry.function().ok_or_else(|| CliError::Config(format!("instance: {} is a bare distribution, this needs a function", entry.name)))
}

fn configured_generator(cfg: &ExperimentConfig) -> Result<Option<OnlineGenerator>, CliError> {
    cfg.generator.as_ref().map(|g| g.to_generator().map_err(|e| CliError::Config(format!("generator: {e}")))).transpose()
}

fn sample_table(v: &NotionValue) -> Table {
    let mut t = Table::new("samples", &["outcome", "prob", "value", "ratio"]);
    for r in &v.samples {
        let ratio = r.value.ratio().map_or_else(|| "inf".into(), |x| format_rational(&x));
        t.rows.push(vec![outcome_to_string(&r.outcome), format_rational(&r.prob), format_real(r.value.value), ratio]);
    }
    t
}

#[derive(Serialize)]
struct ValueSummary<'a> {
    notion: Notion,
    instance: &'a str,
    #[serde(with = "centlab::serial::real")]
    expectation: f64,
    #[serde(with = "centlab::serial::real_vec")]
    terms: Vec<f64>,
    delta: String,
    #[serde(with = "centlab::serial::real")]
    delta_quantile: f64,
    #[serde(with = "centlab::serial::real")]
    max_sample: f64,
    cost: centlab::notions::Cost,
    generator: GeneratorDoc,
}

fn summarize<'a>(entry: &'a CorpusEntry, v: &NotionValue, g: &OnlineGenerator, cfg: &ExperimentConfig) -> ValueSummary<'a> {
    ValueSummary {
        notion: v.notion,
        instance: &entry.name,
        expectation: v.expectation,
        terms: v.terms.clone(),
        delta: format_rational(&cfg.budget.delta),
        delta_quantile: v.quantile(&cfg.budget.delta),
        max_sample: v.max_sample(),
        cost: v.cost,
        generator: g.into(),
    }
}

/// Evaluate one notion for a fixed adversary: the configured generator, or
/// the honest one, paired with its posterior simulator.
pub fn compute(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let entry = cfg.entry()?;
    let notion = cfg.notion()?;
    let (value, g) = if notion.is_offline() {
        let f = function_of(&entry)?;
        let (rel, problem, yw) = inversion_problem(f);
        let g = match configured_generator(cfg)? {
            Some(g) => g,
            None => honest_generator(f, &[f.output_bits()])?,
        };
        let generator = g.flatten();
        let simulator = Simulator::posterior(&generator, problem.instances().support().map(|o| o[0]))?;
        let adv = AdversaryPair { generator, simulator };
        let v = match notion {
            Notion::HardnessRe => hardness_re(&problem, &adv)?,
            Notion::WitnessHardnessRe => witness_hardness_re(&rel, &yw, &adv)?,
            _ => relative_pseudoentropy(&yw, &adv.simulator)?,
        };
        (v, g)
    } else {
        let y = entry.joint();
        let g = match configured_generator(cfg)? {
            Some(g) => g,
            None => suite::default_generator(&entry)?,
        };
        let v = match notion {
            Notion::NbHardnessRe => nb_hardness_re(&y, &g, &OnlineSimulator::posterior(&g))?,
            Notion::NbInaccessibleRe => nb_inaccessible_re(&y, &g)?,
            _ => inaccessible_entropy(&y, &g)?,
        };
        (v, g)
    };
    let report = envelope("compute", cfg, summarize(&entry, &value, &g, cfg))?;
    Ok(Outcome { report, tables: vec![sample_table(&value)], failed: false })
}

#[derive(Serialize)]
struct SearchSummary<'a> {
    #[serde(flatten)]
    value: ValueSummary<'a>,
    index: u64,
    exact: bool,
    evaluated: u64,
    family_size: String,
    fingerprint: String,
}

/// Minimum of a notion over an exhaustive (or seeded random) generator
/// family.
pub fn brute_force(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let entry = cfg.entry()?;
    let notion = cfg.notion()?;
    let (target, default_seeds) = if notion.is_offline() {
        let f = function_of(&entry)?;
        let (relation, _, joint) = inversion_problem(f);
        (SearchTarget::Problem { relation, joint }, vec![f.input_bits()])
    } else {
        let y = entry.joint();
        let seeds = y.widths().to_vec();
        (SearchTarget::Dist(y), seeds)
    };
    let spec = cfg.search_spec(notion, default_seeds)?;
    let r = brute_force_best(&target, &spec)?;
    let g = r.adversary.generator();
    let summary = SearchSummary {
        value: summarize(&entry, &r.value, &g, cfg),
        index: r.index,
        exact: r.exact,
        evaluated: r.evaluated,
        family_size: r.family_size.to_string(),
        fingerprint: r.fingerprint.clone(),
    };
    let report = envelope("brute-force", cfg, summary)?;
    Ok(Outcome { report, tables: vec![sample_table(&r.value)], failed: false })
}

/// `T=a..b` (inclusive) or `T=v1,v2,...` with `inf` allowed.
pub fn parse_sweep(s: &str) -> Result<Vec<Attempts>, CliError> {
    let bad = |why: &str| CliError::Config(format!("--sweep `{s}`: {why}"));
    let body = s.strip_prefix("T=").ok_or_else(|| bad("expected T=..."))?;
    let ts: Vec<Attempts> = if let Some((a, b)) = body.split_once("..") {
        let a: u64 = a.parse().map_err(|_| bad("range bounds are integers"))?;
        let b: u64 = b.parse().map_err(|_| bad("range bounds are integers"))?;
        if a == 0 || a > b {
            return Err(bad("need 1 ≤ a ≤ b"));
        }
        (a..=b).map(Attempts::Finite).collect()
    } else {
        body.split(',').map(|t| t.trim().parse::<Attempts>().map_err(|_| bad("values are positive integers or inf"))).collect::<Result<_, _>>()?
    };
    if ts.contains(&Attempts::Finite(0)) {
        return Err(bad("T must be at least 1"));
    }
    Ok(ts)
}

/// Rejection-error trade-off: the per-sample identity at each `T`, with the
/// expected error column checked to be nonincreasing.
pub fn tradeoff(cfg: &ExperimentConfig, sweep: &[Attempts]) -> Result<Outcome, CliError> {
    let entry = cfg.entry()?;
    let f = function_of(&entry)?;
    let (rel, _, yw) = inversion_problem(f);
    let g = match configured_generator(cfg)? {
        Some(g) => g,
        None => honest_generator(f, f.blocks())?,
    };
    let mut t = Table::new(
        "tradeoff",
        &["T", "next_block", "expected_error", "direct", "max_deviation", "identity_holds"],
    );
    let mut failed = false;
    let mut prev: Option<(Attempts, f64)> = None;
    let mut monotone = true;
    let mut reports = Vec::new();
    for &attempts in sweep {
        let r = bkl_identity(&rel, &yw, &g, attempts, cfg.fault_injection)?;
        let err: f64 = r.decomposition.iter().map(|row| to_f64(&row.prob) * row.values[2]).sum();
        if let Some((pt, pe)) = prev {
            if pt < attempts && err > pe + centlab::TOLERANCE {
                monotone = false;
            }
        }
        prev = Some((attempts, err));
        failed |= !r.holds;
        t.rows.push(vec![
            attempts.to_string(),
            format_real(r.lhs_value),
            format_real(err),
            format_real(r.rhs_value),
            format_real(r.max_deviation),
            r.holds.to_string(),
        ]);
        reports.push(r);
    }
    failed |= !monotone;
    let result = json!({
        "instance": entry.name,
        "generator": GeneratorDoc::from(&g),
        "error_nonincreasing": monotone,
        "reports": reports,
    });
    Ok(Outcome { report: envelope("tradeoff", cfg, result)?, tables: vec![t], failed })
}

/// Conclusion-side parameters for each theorem.
pub fn params(cfg: &ExperimentConfig, theorems: &[Theorem]) -> Result<Outcome, CliError> {
    let mut t = Table::new("params", &["theorem", "quantity", "value", "formula"]);
    let mut out = Vec::new();
    for &th in theorems {
        let c = param_calculator(&cfg.budget, th)?;
        for q in &c.quantities {
            t.rows.push(vec![th.name().into(), q.name.clone(), format_real(q.value), q.formula.clone()]);
        }
        out.push(c);
    }
    Ok(Outcome { report: envelope("params", cfg, out)?, tables: vec![t], failed: false })
}

/// Every verifier on each instance, plus the instance-free rows.
pub fn verify_all(cfg: &ExperimentConfig, entries: &[CorpusEntry]) -> Result<Outcome, CliError> {
    let mut rows: Vec<SuiteRow> = Vec::new();
    for e in entries {
        rows.extend(suite::verify_instance(e, &cfg.budget, cfg.fault_injection)?);
    }
    rows.extend(suite::verify_global(&cfg.budget));
    let mut t = Table::new("verify", &["instance", "check", "status", "checks", "max_deviation", "detail"]);
    for r in &rows {
        let status = serde_json::to_value(r.status)?.as_str().unwrap_or_default().to_string();
        t.rows.push(vec![r.instance.clone(), r.check.clone(), status, r.checks.to_string(), format_real(r.max_deviation), r.detail.clone()]);
    }
    let failed = rows.iter().any(|r| r.status == Status::Fail);
    Ok(Outcome { report: envelope("verify-all", cfg, &rows)?, tables: vec![t], failed })
}
