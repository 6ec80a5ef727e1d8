use std::collections::BTreeSet;

use num_traits::One;

use super::relation::Relation;
use crate::error::{Error, Result};
use crate::probkit::{outcome_to_string, pow2_inv, Block, FiniteDist, Outcome};

/// Cap on the total number of seed bits of a single generator table.
pub const MAX_SEED_BITS: u32 = 20;

fn check_seed_bits(bits: u32) -> Result<()> {
    if bits > MAX_SEED_BITS {
        return Err(Error::InvalidGenerator(format!(
            "{bits} seed bits exceed the table cap of {MAX_SEED_BITS}"
        )));
    }
    Ok(())
}

fn check_row(row: &[Block], widths: &[u8], seed: &str) -> Result<()> {
    if row.len() != widths.len() || row.iter().zip(widths).any(|(b, &w)| b.is_bottom() || b.width() != w) {
        return Err(Error::InvalidGenerator(format!(
            "output {} for seed {seed} does not match block widths {widths:?}",
            outcome_to_string(row)
        )));
    }
    Ok(())
}

/// A generator `G : {0,1}^s → {0,1}^{ℓ_1} × … × {0,1}^{ℓ_k}` given by its table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockGenerator {
    seed_width: u8,
    block_widths: Vec<u8>,
    table: Vec<Outcome>,
}

impl BlockGenerator {
    /// `table[r]` is the output on seed `r` (seeds in increasing order).
    pub fn new(seed_width: u8, block_widths: Vec<u8>, table: Vec<Outcome>) -> Result<Self> {
        check_seed_bits(seed_width as u32)?;
        if table.len() != 1usize << seed_width {
            return Err(Error::InvalidGenerator(format!(
                "table has {} rows, expected 2^{seed_width}",
                table.len()
            )));
        }
        for (r, row) in table.iter().enumerate() {
            check_row(row, &block_widths, &Block::new(r as u64, seed_width).to_string())?;
        }
        Ok(BlockGenerator { seed_width, block_widths, table })
    }

    pub fn from_fn(seed_width: u8, block_widths: Vec<u8>, f: impl Fn(Block) -> Outcome) -> Result<Self> {
        check_seed_bits(seed_width as u32)?;
        let table = (0..1u64 << seed_width).map(|r| f(Block::new(r, seed_width))).collect();
        Self::new(seed_width, block_widths, table)
    }

    pub fn seed_width(&self) -> u8 {
        self.seed_width
    }

    pub fn block_widths(&self) -> &[u8] {
        &self.block_widths
    }

    pub fn table(&self) -> &[Outcome] {
        &self.table
    }

    pub fn eval(&self, seed: Block) -> &Outcome {
        &self.table[seed.value() as usize]
    }

    pub fn seeds(&self) -> impl Iterator<Item = Block> + '_ {
        (0..self.table.len() as u64).map(|r| Block::new(r, self.seed_width))
    }

    /// Distribution of `G(R)` for uniform `R`.
    pub fn output_dist(&self) -> FiniteDist {
        let p = pow2_inv(self.seed_width as u32);
        FiniteDist::new(self.block_widths.clone(), self.table.iter().map(|o| (o.clone(), p.clone())))
            .expect("generator tables define distributions")
    }

    /// Joint distribution of `(R, G(R))` with the seed in position 0.
    pub fn seed_output_joint(&self) -> FiniteDist {
        let p = pow2_inv(self.seed_width as u32);
        let mut widths = vec![self.seed_width];
        widths.extend_from_slice(&self.block_widths);
        let entries = self.seeds().map(|r| {
            let mut o = vec![r];
            o.extend_from_slice(self.eval(r));
            (o, p.clone())
        });
        FiniteDist::new(widths, entries).expect("generator tables define distributions")
    }

    /// Concatenation of all but the last block.
    pub fn instance(&self, seed: Block) -> Block {
        let row = self.eval(seed);
        Block::concat(&row[..row.len() - 1]).expect("instance fits")
    }

    pub fn witness(&self, seed: Block) -> Block {
        *self.eval(seed).last().expect("generator has blocks")
    }

    /// True iff every seed yields a pair (instance blocks, witness) in Π.
    pub fn supported_on(&self, rel: &Relation) -> bool {
        let m = self.block_widths.len();
        if m < 2 {
            return false;
        }
        let inst: u32 = self.block_widths[..m - 1].iter().map(|&w| w as u32).sum();
        if inst != rel.instance_width() as u32 || self.block_widths[m - 1] != rel.witness_width() {
            return false;
        }
        self.seeds().all(|r| rel.contains(&self.instance(r), &self.witness(r)))
    }

    /// The same generator with all instance blocks merged into one.
    pub fn two_block(&self) -> Result<BlockGenerator> {
        let m = self.block_widths.len();
        if m < 2 {
            return Err(Error::InvalidGenerator("need an instance and a witness block".into()));
        }
        let inst = self.block_widths[..m - 1].iter().map(|&w| w as u32).sum::<u32>();
        if inst > 64 {
            return Err(Error::WidthMismatch("instance wider than 64 bits".into()));
        }
        let widths = vec![inst as u8, self.block_widths[m - 1]];
        let table = self.seeds().map(|r| vec![self.instance(r), self.witness(r)]).collect();
        BlockGenerator::new(self.seed_width, widths, table)
    }

    /// Online view: the whole seed is read by the first block.
    pub fn as_online(&self) -> OnlineGenerator {
        let k = self.block_widths.len();
        let mut seed_widths = vec![0; k];
        if k > 0 {
            seed_widths[0] = self.seed_width;
        }
        let maps = (0..k).map(|i| self.table.iter().map(|row| row[i]).collect()).collect();
        OnlineGenerator::new(seed_widths, self.block_widths.clone(), maps).expect("block table is online")
    }
}

/// An online generator: block `i` is a function of the seed blocks `r_1..r_i`.
///
/// `maps[i]` is indexed by the concatenation `r_1 ‖ … ‖ r_i` read as a number,
/// so block `i` cannot see later seed blocks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OnlineGenerator {
    seed_widths: Vec<u8>,
    block_widths: Vec<u8>,
    maps: Vec<Vec<Block>>,
}

impl OnlineGenerator {
    pub fn new(seed_widths: Vec<u8>, block_widths: Vec<u8>, maps: Vec<Vec<Block>>) -> Result<Self> {
        if seed_widths.len() != block_widths.len() || maps.len() != block_widths.len() {
            return Err(Error::InvalidGenerator(format!(
                "{} seed widths, {} block widths and {} maps",
                seed_widths.len(),
                block_widths.len(),
                maps.len()
            )));
        }
        let total: u32 = seed_widths.iter().map(|&s| s as u32).sum();
        check_seed_bits(total)?;
        let mut prefix = 0u32;
        for (i, map) in maps.iter().enumerate() {
            prefix += seed_widths[i] as u32;
            if map.len() != 1usize << prefix {
                return Err(Error::InvalidGenerator(format!(
                    "block {i} map has {} entries, expected 2^{prefix}",
                    map.len()
                )));
            }
            if let Some(b) = map.iter().find(|b| b.is_bottom() || b.width() != block_widths[i]) {
                return Err(Error::InvalidGenerator(format!(
                    "block {i} emits {b}, expected {} bits",
                    block_widths[i]
                )));
            }
        }
        Ok(OnlineGenerator { seed_widths, block_widths, maps })
    }

    /// Build from `f(i, r_{≤i})`.
    pub fn from_fn(seed_widths: Vec<u8>, block_widths: Vec<u8>, f: impl Fn(usize, &[Block]) -> Block) -> Result<Self> {
        let total: u32 = seed_widths.iter().map(|&s| s as u32).sum();
        check_seed_bits(total)?;
        let mut maps = Vec::with_capacity(block_widths.len());
        let mut prefix_widths = Vec::new();
        for (i, &s) in seed_widths.iter().enumerate() {
            prefix_widths.push(s);
            let bits: u32 = prefix_widths.iter().map(|&w| w as u32).sum();
            let map = (0..1u64 << bits)
                .map(|v| f(i, &Block::new(v, bits as u8).split(&prefix_widths).expect("prefix widths")))
                .collect();
            maps.push(map);
        }
        Self::new(seed_widths, block_widths, maps)
    }

    pub fn num_blocks(&self) -> usize {
        self.block_widths.len()
    }

    pub fn seed_widths(&self) -> &[u8] {
        &self.seed_widths
    }

    pub fn block_widths(&self) -> &[u8] {
        &self.block_widths
    }

    pub fn maps(&self) -> &[Vec<Block>] {
        &self.maps
    }

    /// Number of seed bits read by blocks `0..=i`.
    pub fn prefix_bits(&self, i: usize) -> u32 {
        self.seed_widths[..=i].iter().map(|&s| s as u32).sum()
    }

    pub fn total_seed_bits(&self) -> u32 {
        self.seed_widths.iter().map(|&s| s as u32).sum()
    }

    /// Output of block `i` on seed prefix `r_1..r_{i+1}` (zero-based `i`).
    pub fn block(&self, i: usize, prefix: &[Block]) -> Block {
        assert_eq!(prefix.len(), i + 1, "block {i} reads exactly {} seed blocks", i + 1);
        let idx = Block::concat(prefix).expect("seed prefix").value();
        self.maps[i][idx as usize]
    }

    /// Seed values `r_i` with `G̃_i(r_{<i}, r_i) = y`, given the packed prefix `r_{<i}`.
    pub fn block_preimages(&self, i: usize, packed_prefix: u64, y: Block) -> Vec<u64> {
        let s = self.seed_widths[i];
        let base = (packed_prefix << s) as usize;
        (0..1u64 << s).filter(|&r| self.maps[i][base + r as usize] == y).collect()
    }

    pub fn eval(&self, seeds: &[Block]) -> Outcome {
        (0..self.num_blocks()).map(|i| self.block(i, &seeds[..=i])).collect()
    }

    /// All seed tuples in lexicographic order.
    pub fn seed_tuples(&self) -> impl Iterator<Item = Outcome> + '_ {
        let total = self.total_seed_bits();
        (0..1u64 << total).map(move |v| Block::new(v, total as u8).split(&self.seed_widths).expect("seed widths"))
    }

    /// Joint distribution of `(R̃_1..R̃_m, Ỹ_1..Ỹ_m)` under uniform seeds.
    pub fn output_joint(&self) -> FiniteDist {
        let p = pow2_inv(self.total_seed_bits());
        let mut widths = self.seed_widths.clone();
        widths.extend_from_slice(&self.block_widths);
        let entries = self.seed_tuples().map(|r| {
            let mut o = r.clone();
            o.extend(self.eval(&r));
            (o, p.clone())
        });
        FiniteDist::new(widths, entries).expect("generator tables define distributions")
    }

    pub fn output_dist(&self) -> FiniteDist {
        let p = pow2_inv(self.total_seed_bits());
        FiniteDist::new(self.block_widths.clone(), self.seed_tuples().map(|r| (self.eval(&r), p.clone())))
            .expect("generator tables define distributions")
    }

    /// `Supp(G̃(R̃)) ⊆ Supp(y)` with matching block widths.
    pub fn supported_on(&self, y: &FiniteDist) -> bool {
        y.widths() == self.block_widths.as_slice() && self.output_dist().support().all(|o| y.contains(o))
    }

    /// Every seed path's output, as a set.
    pub fn image(&self) -> BTreeSet<Outcome> {
        self.seed_tuples().map(|r| self.eval(&r)).collect()
    }

    /// The block generator on the concatenated seed.
    pub fn flatten(&self) -> BlockGenerator {
        let total = self.total_seed_bits() as u8;
        BlockGenerator::from_fn(total, self.block_widths.clone(), |r| {
            self.eval(&r.split(&self.seed_widths).expect("seed widths"))
        })
        .expect("flattened tables are valid")
    }

    /// Copy with one table entry replaced.
    pub fn with_entry(&self, i: usize, packed_prefix: u64, value: Block) -> Result<OnlineGenerator> {
        let mut maps = self.maps.clone();
        let slot = maps
            .get_mut(i)
            .and_then(|m| m.get_mut(packed_prefix as usize))
            .ok_or_else(|| Error::InvalidGenerator(format!("no entry {packed_prefix} in block {i}")))?;
        *slot = value;
        OnlineGenerator::new(self.seed_widths.clone(), self.block_widths.clone(), maps)
    }

    /// Uniform mass of a full seed tuple.
    pub fn seed_mass(&self) -> crate::probkit::Prob {
        if self.total_seed_bits() == 0 {
            crate::probkit::Prob::one()
        } else {
            pow2_inv(self.total_seed_bits())
        }
    }
}

/// Concatenate each outcome into a single block.
pub fn merge_blocks(d: &FiniteDist) -> Result<FiniteDist> {
    let total: u32 = d.widths().iter().map(|&w| w as u32).sum();
    if total > 64 {
        return Err(Error::WidthMismatch(format!("{total} bits do not fit one block")));
    }
    d.pushforward(vec![total as u8], |o| vec![Block::concat(o).expect("no ⊥ in partitioned outcomes")])
}

/// Re-chunk outcomes into blocks of the given widths.
pub fn partition_blocks(d: &FiniteDist, widths: &[u8]) -> Result<FiniteDist> {
    let total: u32 = d.widths().iter().map(|&w| w as u32).sum();
    let target: u32 = widths.iter().map(|&w| w as u32).sum();
    if total != target {
        return Err(Error::WidthMismatch(format!(
            "outcomes have {total} bits, partition {widths:?} covers {target}"
        )));
    }
    if d.contains_bottom() {
        return Err(Error::WidthMismatch("cannot partition outcomes containing ⊥".into()));
    }
    let merged = merge_blocks(d)?;
    merged.pushforward(widths.to_vec(), |o| o[0].split(widths).expect("widths checked"))
}
