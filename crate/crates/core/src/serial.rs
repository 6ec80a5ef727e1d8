//! Text encodings shared by reports and the CLI.
//!
//! Grammar of the scalar encodings:
//!
//! ```text
//! rational := int | int "/" int | decimal        e.g. "3/8", "1", "0.125"
//! real     := json-number | "inf" | "-inf" | "nan"
//! block    := [01]* | "⊥"                        (most significant bit first)
//! hex      := "0x" [0-9a-f]+ | "⊥"               (table rows; width given separately)
//! ```
//!
//! Documents are JSON. Distributions list outcomes as arrays of bit strings,
//! generator tables list each block map as hex rows indexed by the packed
//! seed prefix. Content hashes are SHA-256 over the compact JSON encoding.

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::genkit::OnlineGenerator;
use crate::instances::{CorpusEntry, InstanceKind, ToyFunction};
use crate::probkit::{Block, FiniteDist, Prob};

pub fn format_rational(p: &Prob) -> String {
    if p.denom().is_one() {
        p.numer().to_string()
    } else {
        format!("{}/{}", p.numer(), p.denom())
    }
}

pub fn parse_rational(s: &str) -> Result<Prob> {
    let s = s.trim();
    let bad = || Error::Parse(format!("`{s}` is not a rational"));
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(Error::Parse(format!("`{s}` has a zero denominator")));
        }
        return Ok(Prob::new(n, d));
    }
    if let Some((int, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let neg = int.starts_with('-');
        let digits = format!("{}{frac}", int.trim_start_matches('-'));
        let n: BigInt = digits.parse().map_err(|_| bad())?;
        let d = num_traits::pow(BigInt::from(10), frac.len());
        let v = Prob::new(n, d);
        return Ok(if neg { -v } else { v });
    }
    Ok(Prob::from_integer(s.parse().map_err(|_| bad())?))
}

/// `#[serde(with = "serial::rational")]` for [`Prob`] fields.
pub mod rational {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(p: &Prob, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(p))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Prob, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Int(i64),
        }
        match Raw::deserialize(d)? {
            Raw::Text(t) => parse_rational(&t).map_err(serde::de::Error::custom),
            Raw::Int(i) => Ok(Prob::from_integer(i.into())),
        }
    }
}

/// `#[serde(with = "serial::real")]` for `f64` fields that may be infinite.
pub mod real {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else {
            s.serialize_str(&super::format_real(*x))
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(x) => Ok(x),
            Raw::Text(t) => super::parse_real(&t).map_err(serde::de::Error::custom),
        }
    }
}

/// Same as [`real`] for `Vec<f64>`.
pub mod real_vec {
    use serde::ser::SerializeSeq;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(xs: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(serde::Serialize)]
        struct R(#[serde(with = "super::real")] f64);
        let mut seq = s.serialize_seq(Some(xs.len()))?;
        for &x in xs {
            seq.serialize_element(&R(x))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<f64>, D::Error> {
        #[derive(Deserialize)]
        struct R(#[serde(with = "super::real")] f64);
        Ok(Vec::<R>::deserialize(d)?.into_iter().map(|r| r.0).collect())
    }
}

/// Shortest round-tripping decimal, or `inf`/`-inf`/`nan`.
pub fn format_real(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{x:?}")
    }
}

pub fn parse_real(s: &str) -> Result<f64> {
    match s.trim() {
        "inf" | "+inf" | "∞" => Ok(f64::INFINITY),
        "-inf" | "-∞" => Ok(f64::NEG_INFINITY),
        "nan" => Ok(f64::NAN),
        t => t.parse().map_err(|_| Error::Parse(format!("`{s}` is not a real number"))),
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// SHA-256 of the compact JSON encoding.
pub fn content_hash<T: Serialize + ?Sized>(v: &T) -> String {
    sha256_hex(&serde_json::to_vec(v).expect("serializable value"))
}

fn parse_blocks(parts: &[String]) -> Result<Vec<Block>> {
    parts.iter().map(|p| Block::parse(p)).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistEntry {
    pub outcome: Vec<String>,
    #[serde(with = "rational")]
    pub prob: Prob,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistDoc {
    pub widths: Vec<u8>,
    pub entries: Vec<DistEntry>,
}

impl DistDoc {
    pub fn to_dist(&self) -> Result<FiniteDist> {
        let entries = self
            .entries
            .iter()
            .map(|e| Ok((parse_blocks(&e.outcome)?, e.prob.clone())))
            .collect::<Result<Vec<_>>>()?;
        FiniteDist::new(self.widths.clone(), entries)
    }
}

impl From<&FiniteDist> for DistDoc {
    fn from(d: &FiniteDist) -> Self {
        DistDoc {
            widths: d.widths().to_vec(),
            entries: d
                .entries()
                .iter()
                .map(|(o, p)| DistEntry { outcome: o.iter().map(|b| b.to_string()).collect(), prob: p.clone() })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorDoc {
    pub seed_widths: Vec<u8>,
    pub block_widths: Vec<u8>,
    /// `maps[i][r_1‖…‖r_i]` as hex.
    pub maps: Vec<Vec<String>>,
}

impl GeneratorDoc {
    pub fn to_generator(&self) -> Result<OnlineGenerator> {
        if self.maps.len() != self.block_widths.len() {
            return Err(Error::Parse(format!("{} maps for {} blocks", self.maps.len(), self.block_widths.len())));
        }
        let maps = self
            .maps
            .iter()
            .zip(&self.block_widths)
            .map(|(rows, &w)| rows.iter().map(|h| Block::from_hex(h, w)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        OnlineGenerator::new(self.seed_widths.clone(), self.block_widths.clone(), maps)
    }
}

impl From<&OnlineGenerator> for GeneratorDoc {
    fn from(g: &OnlineGenerator) -> Self {
        GeneratorDoc {
            seed_widths: g.seed_widths().to_vec(),
            block_widths: g.block_widths().to_vec(),
            maps: g.maps().iter().map(|m| m.iter().map(Block::to_hex).collect()).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionDoc {
    pub name: String,
    pub n: u8,
    pub out_width: u8,
    pub blocks: Vec<u8>,
    /// `f(x)` as hex, indexed by `x`.
    pub table: Vec<String>,
}

impl FunctionDoc {
    pub fn to_function(&self) -> Result<ToyFunction> {
        let table = self
            .table
            .iter()
            .map(|h| Block::from_hex(h, self.out_width).map(|b| b.value()))
            .collect::<Result<Vec<_>>>()?;
        ToyFunction::new(self.name.clone(), self.n, self.out_width, table, self.blocks.clone())
    }
}

impl From<&ToyFunction> for FunctionDoc {
    fn from(f: &ToyFunction) -> Self {
        FunctionDoc {
            name: f.name().to_string(),
            n: f.input_bits(),
            out_width: f.output_bits(),
            blocks: f.blocks().to_vec(),
            table: f.table().iter().map(|&v| format!("0x{v:x}")).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InstanceDoc {
    Function(FunctionDoc),
    Joint(DistDoc),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusDoc {
    pub name: String,
    pub description: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub instance: InstanceDoc,
}

impl CorpusDoc {
    pub fn to_entry(&self) -> Result<CorpusEntry> {
        let kind = match &self.instance {
            InstanceDoc::Function(f) => InstanceKind::Function(f.to_function()?),
            InstanceDoc::Joint(d) => InstanceKind::Joint(d.to_dist()?),
        };
        Ok(CorpusEntry { name: self.name.clone(), description: self.description.clone(), seed: self.seed, kind })
    }
}

impl From<&CorpusEntry> for CorpusDoc {
    fn from(e: &CorpusEntry) -> Self {
        let instance = match &e.kind {
            InstanceKind::Function(f) => InstanceDoc::Function(f.into()),
            InstanceKind::Joint(d) => InstanceDoc::Joint(d.into()),
        };
        CorpusDoc { name: e.name.clone(), description: e.description.clone(), seed: e.seed, instance }
    }
}

/// Corpus manifest: every entry with its own content hash.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ManifestRow {
    pub name: String,
    pub sha256: String,
}

pub fn corpus_manifest(entries: &[CorpusEntry]) -> Vec<ManifestRow> {
    entries
        .iter()
        .map(|e| ManifestRow { name: e.name.clone(), sha256: content_hash(&CorpusDoc::from(e)) })
        .collect()
}
