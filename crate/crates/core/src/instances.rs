//! Toy functions, their inversion problems, and the named corpus.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::genkit::{partition_blocks, OnlineGenerator, Relation, SearchProblem};
use crate::probkit::{ratio, Block, FiniteDist};

/// Default cap on input bits.
pub const DEFAULT_MAX_INPUT_BITS: u8 = 12;
/// Inputs beyond this are refused outright.
pub const HARD_MAX_INPUT_BITS: u8 = 16;

/// A function `{0,1}^n → {0,1}^k` given by its table, with a default
/// partition of the output into blocks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ToyFunction {
    name: String,
    n: u8,
    out_width: u8,
    table: Vec<u64>,
    blocks: Vec<u8>,
}

impl ToyFunction {
    pub fn new(name: impl Into<String>, n: u8, out_width: u8, table: Vec<u64>, blocks: Vec<u8>) -> Result<Self> {
        if n > HARD_MAX_INPUT_BITS || out_width > HARD_MAX_INPUT_BITS {
            return Err(Error::Domain(format!("{n}-bit toy functions exceed the hard cap of {HARD_MAX_INPUT_BITS}")));
        }
        if table.len() != 1usize << n {
            return Err(Error::InvalidGenerator(format!("table has {} rows, expected 2^{n}", table.len())));
        }
        if let Some(v) = table.iter().find(|&&v| v >= 1u64 << out_width) {
            return Err(Error::WidthMismatch(format!("value {v} does not fit {out_width} bits")));
        }
        if blocks.iter().map(|&b| b as u32).sum::<u32>() != out_width as u32 {
            return Err(Error::WidthMismatch(format!("blocks {blocks:?} do not partition {out_width} bits")));
        }
        Ok(ToyFunction { name: name.into(), n, out_width, table, blocks })
    }

    pub fn from_fn(name: impl Into<String>, n: u8, out_width: u8, blocks: Vec<u8>, f: impl Fn(u64) -> u64) -> Result<Self> {
        if n > HARD_MAX_INPUT_BITS {
            return Err(Error::Domain(format!("{n}-bit toy functions exceed the hard cap of {HARD_MAX_INPUT_BITS}")));
        }
        Self::new(name, n, out_width, (0..1u64 << n).map(f).collect(), blocks)
    }

    /// A uniformly random permutation of `{0,1}^n` drawn from `seed`.
    pub fn random_permutation(name: impl Into<String>, n: u8, blocks: Vec<u8>, seed: u64) -> Result<Self> {
        let mut table: Vec<u64> = (0..1u64 << n).collect();
        table.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        Self::new(name, n, n, table, blocks)
    }

    /// A uniformly random function `{0,1}^n → {0,1}^n` drawn from `seed`.
    pub fn random_function(name: impl Into<String>, n: u8, blocks: Vec<u8>, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let table = (0..1u64 << n).map(|_| rng.gen_range(0..1u64 << n)).collect();
        Self::new(name, n, n, table, blocks)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn input_bits(&self) -> u8 {
        self.n
    }

    pub fn output_bits(&self) -> u8 {
        self.out_width
    }

    pub fn table(&self) -> &[u64] {
        &self.table
    }

    pub fn blocks(&self) -> &[u8] {
        &self.blocks
    }

    pub fn eval(&self, x: u64) -> Block {
        Block::new(self.table[x as usize], self.out_width)
    }

    /// Joint `(f(X)_1, …, f(X)_m, X)` for uniform `X`, with the output split
    /// into `blocks`.
    pub fn joint_with(&self, blocks: &[u8]) -> Result<FiniteDist> {
        let mut widths = blocks.to_vec();
        widths.push(self.n);
        let whole = FiniteDist::uniform(vec![self.n]).pushforward(vec![self.out_width, self.n], |o| vec![self.eval(o[0].value()), o[0]])?;
        partition_blocks(&whole, &widths)
    }

    /// [`joint_with`](Self::joint_with) using the default partition.
    pub fn joint(&self) -> FiniteDist {
        self.joint_with(&self.blocks).expect("default partition is valid")
    }
}

/// `Π^f = {(f(x), x)}`, the instance distribution `f(X)`, and the joint
/// `(f(X), X)` for uniform `X`.
pub fn inversion_problem(f: &ToyFunction) -> (Relation, SearchProblem, FiniteDist) {
    let rel = Relation::new(f.out_width, f.n, (0..1u64 << f.n).map(|x| (f.eval(x), Block::new(x, f.n)))).expect("widths match");
    let yw = FiniteDist::uniform(vec![f.n])
        .pushforward(vec![f.out_width, f.n], |o| vec![f.eval(o[0].value()), o[0]])
        .expect("widths match");
    let problem = SearchProblem::new(rel.clone(), yw.marginal(&[0])).expect("every image has a preimage");
    (rel, problem, yw)
}

/// `G^f(X) = (f(X)_1, …, f(X)_m, X)` with the whole seed read by block 1 and
/// every later block seedless.
pub fn honest_generator(f: &ToyFunction, blocks: &[u8]) -> Result<OnlineGenerator> {
    if blocks.iter().map(|&b| b as u32).sum::<u32>() != f.out_width as u32 {
        return Err(Error::WidthMismatch(format!("blocks {blocks:?} do not partition {} output bits", f.out_width)));
    }
    let mut widths = blocks.to_vec();
    widths.push(f.n);
    let mut seeds = vec![0; widths.len()];
    seeds[0] = f.n;
    OnlineGenerator::from_fn(seeds, widths.clone(), |i, r| {
        let x = r[0].value();
        if i == blocks.len() {
            Block::new(x, f.n)
        } else {
            f.eval(x).split(blocks).expect("partition checked")[i]
        }
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum InstanceKind {
    Function(ToyFunction),
    /// A target joint distribution given directly.
    Joint(FiniteDist),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CorpusEntry {
    pub name: String,
    pub description: String,
    /// RNG seed for randomly drawn entries.
    pub seed: Option<u64>,
    pub kind: InstanceKind,
}

impl CorpusEntry {
    pub fn function(&self) -> Option<&ToyFunction> {
        match &self.kind {
            InstanceKind::Function(f) => Some(f),
            InstanceKind::Joint(_) => None,
        }
    }

    /// The target joint: `(f(X) blocks, X)` for functions.
    pub fn joint(&self) -> FiniteDist {
        match &self.kind {
            InstanceKind::Function(f) => f.joint(),
            InstanceKind::Joint(d) => d.clone(),
        }
    }
}

fn func(name: &str, description: &str, f: ToyFunction, seed: Option<u64>) -> CorpusEntry {
    CorpusEntry { name: name.into(), description: description.into(), seed, kind: InstanceKind::Function(f) }
}

fn joint(name: &str, description: &str, d: FiniteDist) -> CorpusEntry {
    CorpusEntry { name: name.into(), description: description.into(), seed: None, kind: InstanceKind::Joint(d) }
}

const PERM3_SEED: u64 = 3;
const RAND3_SEED: u64 = 33;
const PERM4_SEED: u64 = 4;
const RAND4_SEED: u64 = 44;

/// The named corpus, in a fixed order.
pub fn corpus() -> Vec<CorpusEntry> {
    let bit = |x: u64, n: u8, i: u8| (x >> (n - 1 - i)) & 1;
    let biased = FiniteDist::bernoulli(ratio(1, 4)).expect("valid parameter");
    let f = |r: Result<ToyFunction>| r.expect("corpus tables are valid");
    let j = |r: Result<FiniteDist>| r.expect("corpus distributions are valid");
    vec![
        func("id2", "identity on 2 bits", f(ToyFunction::from_fn("id2", 2, 2, vec![1, 1], |x| x)), None),
        func("const2", "constant 00 on 2 bits", f(ToyFunction::from_fn("const2", 2, 2, vec![1, 1], |_| 0)), None),
        func("and2", "x1 AND x2", f(ToyFunction::from_fn("and2", 2, 1, vec![1], |x| bit(x, 2, 0) & bit(x, 2, 1))), None),
        func("or2", "x1 OR x2", f(ToyFunction::from_fn("or2", 2, 1, vec![1], |x| bit(x, 2, 0) | bit(x, 2, 1))), None),
        func(
            "and-concat2",
            "(x1 AND x2) followed by x1",
            f(ToyFunction::from_fn("and-concat2", 2, 2, vec![1, 1], |x| ((bit(x, 2, 0) & bit(x, 2, 1)) << 1) | bit(x, 2, 0))),
            None,
        ),
        func(
            "xor3",
            "truncated xor: (x1 XOR x2, x2 XOR x3)",
            f(ToyFunction::from_fn("xor3", 3, 2, vec![1, 1], |x| ((bit(x, 3, 0) ^ bit(x, 3, 1)) << 1) | (bit(x, 3, 1) ^ bit(x, 3, 2)))),
            None,
        ),
        func("perm3", "random permutation of 3 bits", f(ToyFunction::random_permutation("perm3", 3, vec![2, 1], PERM3_SEED)), Some(PERM3_SEED)),
        func("rand3", "random function on 3 bits", f(ToyFunction::random_function("rand3", 3, vec![2, 1], RAND3_SEED)), Some(RAND3_SEED)),
        func("perm4", "random permutation of 4 bits", f(ToyFunction::random_permutation("perm4", 4, vec![2, 2], PERM4_SEED)), Some(PERM4_SEED)),
        func("rand4", "random function on 4 bits", f(ToyFunction::random_function("rand4", 4, vec![2, 2], RAND4_SEED)), Some(RAND4_SEED)),
        func(
            "xor4",
            "truncated xor: (x1 XOR x2, x3 XOR x4)",
            f(ToyFunction::from_fn("xor4", 4, 2, vec![1, 1], |x| ((bit(x, 4, 0) ^ bit(x, 4, 1)) << 1) | (bit(x, 4, 2) ^ bit(x, 4, 3)))),
            None,
        ),
        joint("biased-bits", "two independent Bern(1/4) bits", biased.product(&biased)),
        joint("uniform2", "uniform over two 1-bit blocks", FiniteDist::uniform(vec![1, 1])),
        joint(
            "copy2",
            "(b, b) for a uniform bit b",
            j(FiniteDist::uniform_over(vec![1, 1], [vec![Block::new(0, 1), Block::new(0, 1)], vec![Block::new(1, 1), Block::new(1, 1)]])),
        ),
    ]
}

pub fn lookup(name: &str) -> Option<CorpusEntry> {
    corpus().into_iter().find(|e| e.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probkit::outcome;

    #[test]
    fn inversion_examples() {
        let id = lookup("id2").unwrap();
        let (rel, problem, _) = inversion_problem(id.function().unwrap());
        assert!(rel.pairs().all(|(y, w)| y == w));
        assert_eq!(problem.instances(), &FiniteDist::uniform(vec![2]));

        let c = lookup("const2").unwrap();
        let (rel, problem, _) = inversion_problem(c.function().unwrap());
        assert_eq!(problem.instances().support_size(), 1);
        assert_eq!(rel.witnesses(&Block::new(0, 2)).len(), 4);

        let ac = lookup("and-concat2").unwrap();
        let (_, problem, _) = inversion_problem(ac.function().unwrap());
        let y = problem.instances();
        assert_eq!(y.prob(&outcome(&["00"])), ratio(1, 2));
        assert_eq!(y.prob(&outcome(&["01"])), ratio(1, 4));
        assert_eq!(y.prob(&outcome(&["10"])), ratio(0, 1));
        assert_eq!(y.prob(&outcome(&["11"])), ratio(1, 4));
    }

    #[test]
    fn honest_generator_examples() {
        let id = lookup("id2").unwrap();
        let f = id.function().unwrap();
        let g = honest_generator(f, &[1, 1]).unwrap();
        for r in g.seed_tuples() {
            let y = g.eval(&r);
            assert_eq!(Block::concat(&y[..2]).unwrap(), r[0]);
        }
        let j = g.output_dist();
        assert!(j.is_flat());
        assert_eq!(j.support_size(), 4);
        assert_eq!(j, f.joint());
        assert!(honest_generator(f, &[1]).is_err());

        let and = lookup("and2").unwrap();
        let g = honest_generator(and.function().unwrap(), &[1]).unwrap();
        assert_eq!(g.output_dist().support_size(), 4);
        assert!(g.output_dist().is_flat());
    }

    #[test]
    fn corpus_contract() {
        let c = corpus();
        assert!(c.len() >= 10);
        let mut names: Vec<&str> = c.iter().map(|e| e.name.as_str()).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), c.len());
        for e in &c {
            if let Some(f) = e.function() {
                assert!(f.joint().is_flat(), "{}", e.name);
                let (rel, _, _) = inversion_problem(f);
                let g = honest_generator(f, f.blocks()).unwrap();
                assert!(g.flatten().supported_on(&rel), "{}", e.name);
            }
        }
    }

    #[test]
    fn random_entries_regenerate() {
        for e in corpus().into_iter().filter(|e| e.seed.is_some()) {
            let again = lookup(&e.name).unwrap();
            assert_eq!(e, again);
            let f = e.function().unwrap();
            let rebuilt = if e.name.starts_with("perm") {
                ToyFunction::random_permutation(f.name(), f.input_bits(), f.blocks().to_vec(), e.seed.unwrap()).unwrap()
            } else {
                ToyFunction::random_function(f.name(), f.input_bits(), f.blocks().to_vec(), e.seed.unwrap()).unwrap()
            };
            assert_eq!(&rebuilt, f);
        }
        let p = lookup("perm4").unwrap();
        let mut t = p.function().unwrap().table().to_vec();
        t.sort();
        assert_eq!(t, (0..16).collect::<Vec<_>>());
    }
}
