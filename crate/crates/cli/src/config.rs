//! Experiment configuration, as a TOML or JSON file and/or flags.
//!
//! ```toml
//! instance = "and2"              # corpus name, or an inline [instance] table
//! notion = "nb-inaccessible-re"
//!
//! [family]
//! seed_widths = [1, 1, 0]
//! mode = "canonical"             # or "full"
//! cap = 100000
//! random_seed = 7                # fallback when the family exceeds the cap
//! random_samples = 5000
//! parallel = false
//!
//! [budget]                       # every field optional
//! eps = "1/1024"
//! delta = "1/2"
//! attempts = 4                   # or "inf"
//!
//! [output]
//! dir = "out"
//! format = "both"                # csv | json | both
//! ```

use std::path::{Path, PathBuf};

use centlab::genkit::FamilyMode;
use centlab::instances::{lookup, CorpusEntry};
use centlab::notions::Notion;
use centlab::reductions::{ParamBudget, RandomSearch, SearchSpec};
use centlab::serial::{CorpusDoc, GeneratorDoc};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Environment variable holding the global enumeration cap.
pub const CAP_ENV: &str = "CENTLAB_ENUM_CAP";
pub const DEFAULT_GLOBAL_CAP: u64 = 1 << 20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InstanceRef {
    Named(String),
    Inline(CorpusDoc),
}

impl InstanceRef {
    pub fn resolve(&self) -> Result<CorpusEntry, CliError> {
        match self {
            InstanceRef::Named(n) => lookup(n).ok_or_else(|| CliError::Config(format!("instance: no corpus entry named {n:?}"))),
            InstanceRef::Inline(doc) => doc.to_entry().map_err(|e| CliError::Config(format!("instance: {e}"))),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FamilyConfig {
    pub seed_widths: Option<Vec<u8>>,
    pub mode: Option<FamilyMode>,
    pub cap: Option<u64>,
    pub random_seed: Option<u64>,
    pub random_samples: Option<u64>,
    pub parallel: bool,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    #[default]
    Both,
}

impl Format {
    pub fn csv(self) -> bool {
        self != Format::Json
    }

    pub fn json(self) -> bool {
        self != Format::Csv
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    pub format: Format,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub instance: Option<InstanceRef>,
    pub notion: Option<Notion>,
    pub family: FamilyConfig,
    pub budget: ParamBudget,
    /// Fixed adversary for `compute` and `tradeoff`; the honest generator
    /// when absent.
    pub generator: Option<GeneratorDoc>,
    /// Build rejection simulators from a tampered generator table.
    pub fault_injection: bool,
    pub output: OutputConfig,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let is_json = path.extension().is_some_and(|e| e == "json");
        Self::parse(&text, is_json).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Parse a document; errors name the offending field path.
    pub fn parse(text: &str, json: bool) -> Result<Self, String> {
        if json {
            let mut de = serde_json::Deserializer::from_str(text);
            serde_path_to_error::deserialize(&mut de).map_err(|e| format!("field `{}`: {}", e.path(), e.inner()))
        } else {
            let de = toml::Deserializer::parse(text).map_err(|e| e.to_string())?;
            serde_path_to_error::deserialize(de).map_err(|e| format!("field `{}`: {}", e.path(), e.inner().message()))
        }
    }

    pub fn entry(&self) -> Result<CorpusEntry, CliError> {
        self.instance.as_ref().ok_or_else(|| CliError::Config("instance: required for this command".into()))?.resolve()
    }

    pub fn notion(&self) -> Result<Notion, CliError> {
        self.notion.ok_or_else(|| CliError::Config("notion: required for this command".into()))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.budget.validate().map_err(|e| CliError::Config(format!("budget: {e}")))?;
        let global = global_cap()?;
        if let Some(cap) = self.family.cap {
            if cap > global {
                return Err(CliError::Config(format!("family.cap: {cap} exceeds the global cap {global} ({CAP_ENV})")));
            }
        }
        if self.family.random_seed.is_some() != self.family.random_samples.is_some() {
            return Err(CliError::Config("family: random_seed and random_samples go together".into()));
        }
        if let Some(i) = &self.instance {
            i.resolve()?;
        }
        if let Some(g) = &self.generator {
            g.to_generator().map_err(|e| CliError::Config(format!("generator: {e}")))?;
        }
        Ok(())
    }

    pub fn search_spec(&self, notion: Notion, default_seeds: Vec<u8>) -> Result<SearchSpec, CliError> {
        let random = match (self.family.random_seed, self.family.random_samples) {
            (Some(seed), Some(samples)) => Some(RandomSearch { seed, samples }),
            _ => None,
        };
        Ok(SearchSpec {
            notion,
            seed_widths: self.family.seed_widths.clone().unwrap_or(default_seeds),
            mode: self.family.mode.unwrap_or(FamilyMode::Canonical),
            cap: self.family.cap.unwrap_or(global_cap()?) as u128,
            random,
            parallel: self.family.parallel,
        })
    }
}

pub fn global_cap() -> Result<u64, CliError> {
    match std::env::var(CAP_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| CliError::Config(format!("{CAP_ENV}: `{v}` is not a nonnegative integer"))),
        Err(_) => Ok(DEFAULT_GLOBAL_CAP),
    }
}

/// `--family` grammar: `w1,w2,...[/canonical|/full]`, seed widths per block.
pub fn parse_family(spec: &str) -> Result<(Vec<u8>, Option<FamilyMode>), CliError> {
    let bad = |why: &str| CliError::Config(format!("--family `{spec}`: {why}"));
    let (widths, mode) = match spec.split_once('/') {
        Some((w, "canonical")) => (w, Some(FamilyMode::Canonical)),
        Some((w, "full")) => (w, Some(FamilyMode::Full)),
        Some(_) => return Err(bad("mode must be canonical or full")),
        None => (spec, None),
    };
    let widths = widths
        .split(',')
        .map(|w| w.trim().parse::<u8>().map_err(|_| bad("seed widths are small integers")))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((widths, mode))
}
