use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use super::generator::{OnlineGenerator, MAX_SEED_BITS};
use super::relation::Relation;
use crate::error::{Error, Result};
use crate::probkit::{Block, FiniteDist, Outcome};

/// How a family treats generators that differ only by relabeling seeds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyMode {
    /// One representative per class of generators equal up to permuting the
    /// seed values read at each node of the seed tree. Every notion in this
    /// crate is invariant under such relabelings.
    Canonical,
    /// Every table.
    Full,
}

/// All online generators with the given per-block seed widths whose every
/// output lies in a fixed support set.
///
/// A generator is viewed as a tree: the node reached by seed prefix
/// `r_{<i}` chooses, for each value of `r_i`, the next block and the subtree
/// below it. Only blocks that keep the output a prefix of some allowed
/// outcome are offered, so every enumerated generator is in-support.
#[derive(Clone, Debug)]
pub struct GeneratorFamily {
    block_widths: Vec<u8>,
    seed_widths: Vec<u8>,
    mode: FamilyMode,
    extensions: BTreeMap<Outcome, Vec<Block>>,
}

#[derive(Debug)]
struct Node {
    children: Vec<(Block, Arc<Node>)>,
}

impl GeneratorFamily {
    pub fn new(
        block_widths: Vec<u8>,
        seed_widths: Vec<u8>,
        support: impl IntoIterator<Item = Outcome>,
        mode: FamilyMode,
    ) -> Result<Self> {
        if block_widths.is_empty() || block_widths.len() != seed_widths.len() {
            return Err(Error::InvalidGenerator(format!(
                "family needs one seed width per block, got {seed_widths:?} for {block_widths:?}"
            )));
        }
        let bits: u32 = seed_widths.iter().map(|&s| s as u32).sum();
        if bits > MAX_SEED_BITS {
            return Err(Error::InvalidGenerator(format!("{bits} seed bits exceed {MAX_SEED_BITS}")));
        }
        let support: BTreeSet<Outcome> = support.into_iter().collect();
        if support.is_empty() {
            return Err(Error::InvalidGenerator("empty support".into()));
        }
        let mut extensions: BTreeMap<Outcome, BTreeSet<Block>> = BTreeMap::new();
        for o in &support {
            if o.len() != block_widths.len() || o.iter().zip(&block_widths).any(|(b, &w)| b.is_bottom() || b.width() != w) {
                return Err(Error::WidthMismatch(format!("support outcome {o:?} vs widths {block_widths:?}")));
            }
            for i in 0..o.len() {
                extensions.entry(o[..i].to_vec()).or_default().insert(o[i]);
            }
        }
        let extensions = extensions.into_iter().map(|(k, v)| (k, v.into_iter().collect())).collect();
        Ok(GeneratorFamily { block_widths, seed_widths, mode, extensions })
    }

    /// Generators supported on `y`.
    pub fn over_dist(y: &FiniteDist, seed_widths: Vec<u8>, mode: FamilyMode) -> Result<Self> {
        Self::new(y.widths().to_vec(), seed_widths, y.support().cloned(), mode)
    }

    /// Two-block generators `(instance, witness)` supported on Π whose whole
    /// seed is read by the instance block.
    pub fn over_relation(rel: &Relation, seed_width: u8, mode: FamilyMode) -> Result<Self> {
        Self::new(
            vec![rel.instance_width(), rel.witness_width()],
            vec![seed_width, 0],
            rel.pairs().map(|(y, w)| vec![*y, *w]),
            mode,
        )
    }

    pub fn mode(&self) -> FamilyMode {
        self.mode
    }

    pub fn block_widths(&self) -> &[u8] {
        &self.block_widths
    }

    pub fn seed_widths(&self) -> &[u8] {
        &self.seed_widths
    }

    fn options(&self, prefix: &[Block]) -> &[Block] {
        self.extensions.get(prefix).map_or(&[], |v| v.as_slice())
    }

    fn arity(&self, depth: usize) -> usize {
        1usize << self.seed_widths[depth]
    }

    fn combine(&self, n: u128, k: usize) -> u128 {
        match self.mode {
            FamilyMode::Full => n.checked_pow(k as u32).unwrap_or(u128::MAX),
            FamilyMode::Canonical => multichoose(n, k as u128),
        }
    }

    /// Number of generators in the family (saturating).
    pub fn count(&self) -> u128 {
        let mut memo = BTreeMap::new();
        self.count_at(&mut Vec::new(), &mut memo)
    }

    fn count_at(&self, prefix: &mut Outcome, memo: &mut BTreeMap<Outcome, u128>) -> u128 {
        let depth = prefix.len();
        if depth == self.block_widths.len() {
            return 1;
        }
        if let Some(&c) = memo.get(prefix.as_slice()) {
            return c;
        }
        let mut n: u128 = 0;
        for &a in self.options(prefix).to_vec().iter() {
            prefix.push(a);
            n = n.saturating_add(self.count_at(prefix, memo));
            prefix.pop();
        }
        let c = self.combine(n, self.arity(depth));
        memo.insert(prefix.clone(), c);
        c
    }

    /// Enumerate the family in a fixed order. Subtrees below the root are
    /// materialised; root choices are produced lazily.
    pub fn iter(&self) -> FamilyIter<'_> {
        let mut memo = BTreeMap::new();
        let mut options = Vec::new();
        for &a in self.options(&[]) {
            for t in self.subtrees(&mut vec![a], &mut memo).iter() {
                options.push((a, t.clone()));
            }
        }
        FamilyIter {
            family: self,
            tuples: IndexTuples::new(options.len(), self.arity(0), self.mode),
            options,
        }
    }

    /// A uniformly random table of the family (every seed value picks an
    /// allowed block independently), regardless of the mode.
    pub fn sample(&self, rng: &mut impl rand::Rng) -> OnlineGenerator {
        let mut maps: Vec<Vec<Block>> = Vec::with_capacity(self.block_widths.len());
        let mut bits = 0u32;
        for &s in &self.seed_widths {
            bits += s as u32;
            maps.push(vec![Block::empty(); 1usize << bits]);
        }
        self.sample_fill(&mut Vec::new(), 0, rng, &mut maps);
        OnlineGenerator::new(self.seed_widths.clone(), self.block_widths.clone(), maps).expect("family tables are valid")
    }

    fn sample_fill(&self, prefix: &mut Outcome, packed: u64, rng: &mut impl rand::Rng, maps: &mut [Vec<Block>]) {
        let depth = prefix.len();
        let s = self.seed_widths[depth];
        let options = self.options(prefix).to_vec();
        for v in 0..1u64 << s {
            let idx = (packed << s) | v;
            let a = options[rng.gen_range(0..options.len())];
            maps[depth][idx as usize] = a;
            if depth + 1 < self.block_widths.len() {
                prefix.push(a);
                self.sample_fill(prefix, idx, rng, maps);
                prefix.pop();
            }
        }
    }

    fn subtrees(&self, prefix: &mut Outcome, memo: &mut BTreeMap<Outcome, Arc<Vec<Arc<Node>>>>) -> Arc<Vec<Arc<Node>>> {
        if prefix.len() == self.block_widths.len() {
            return Arc::new(vec![Arc::new(Node { children: Vec::new() })]);
        }
        if let Some(t) = memo.get(prefix.as_slice()) {
            return t.clone();
        }
        let mut options = Vec::new();
        for &a in self.options(prefix).to_vec().iter() {
            prefix.push(a);
            for t in self.subtrees(prefix, memo).iter() {
                options.push((a, t.clone()));
            }
            prefix.pop();
        }
        let trees: Vec<Arc<Node>> = IndexTuples::new(options.len(), self.arity(prefix.len()), self.mode)
            .map(|idx| Arc::new(Node { children: idx.iter().map(|&j| options[j].clone()).collect() }))
            .collect();
        let trees = Arc::new(trees);
        memo.insert(prefix.clone(), trees.clone());
        trees
    }

    fn build(&self, root: &[(Block, Arc<Node>)]) -> OnlineGenerator {
        let mut maps: Vec<Vec<Block>> = Vec::with_capacity(self.block_widths.len());
        let mut bits = 0u32;
        for &s in &self.seed_widths {
            bits += s as u32;
            maps.push(vec![Block::empty(); 1usize << bits]);
        }
        self.fill(root, 0, 0, &mut maps);
        OnlineGenerator::new(self.seed_widths.clone(), self.block_widths.clone(), maps).expect("family tables are valid")
    }

    fn fill(&self, children: &[(Block, Arc<Node>)], depth: usize, packed: u64, maps: &mut [Vec<Block>]) {
        let s = self.seed_widths[depth];
        for (v, (a, child)) in children.iter().enumerate() {
            let idx = (packed << s) | v as u64;
            maps[depth][idx as usize] = *a;
            if depth + 1 < self.block_widths.len() {
                self.fill(&child.children, depth + 1, idx, maps);
            }
        }
    }
}

pub struct FamilyIter<'a> {
    family: &'a GeneratorFamily,
    options: Vec<(Block, Arc<Node>)>,
    tuples: IndexTuples,
}

impl Iterator for FamilyIter<'_> {
    type Item = OnlineGenerator;

    fn next(&mut self) -> Option<OnlineGenerator> {
        let idx = self.tuples.next()?;
        let root: Vec<(Block, Arc<Node>)> = idx.iter().map(|&j| self.options[j].clone()).collect();
        Some(self.family.build(&root))
    }
}

/// Length-`k` index tuples over `0..n` in lexicographic order; in canonical
/// mode only nondecreasing tuples.
struct IndexTuples {
    n: usize,
    mode: FamilyMode,
    cur: Option<Vec<usize>>,
    started: bool,
}

impl IndexTuples {
    fn new(n: usize, k: usize, mode: FamilyMode) -> Self {
        IndexTuples { n, mode, cur: (n > 0).then(|| vec![0; k]), started: false }
    }
}

impl Iterator for IndexTuples {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if !self.started {
            self.started = true;
            return self.cur.clone();
        }
        let cur = self.cur.as_mut()?;
        let Some(i) = cur.iter().rposition(|&x| x + 1 < self.n) else {
            self.cur = None;
            return None;
        };
        cur[i] += 1;
        let reset = match self.mode {
            FamilyMode::Canonical => cur[i],
            FamilyMode::Full => 0,
        };
        for x in cur[i + 1..].iter_mut() {
            *x = reset;
        }
        Some(cur.clone())
    }
}

fn multichoose(n: u128, k: u128) -> u128 {
    // C(n + k - 1, k)
    if n == 0 {
        return if k == 0 { 1 } else { 0 };
    }
    let mut acc: u128 = 1;
    for j in 0..k {
        acc = match acc.checked_mul(n + j) {
            Some(v) => v / (j + 1),
            None => return u128::MAX,
        };
    }
    acc
}
