use std::collections::BTreeMap;

use num_traits::{One, Zero};

use super::rejection::{rejection_step, Attempts};
use crate::error::{Error, Result};
use crate::genkit::{BlockGenerator, OnlineGenerator};
use crate::probkit::{outcome_to_string, Block, FiniteDist, Outcome, Prob};

fn seed_dist_ok(d: &FiniteDist, seed_width: u8) -> bool {
    d.widths() == [seed_width]
}

/// An offline simulator: for each instance, a distribution over seeds or ⊥.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Simulator {
    instance_width: u8,
    seed_width: u8,
    map: BTreeMap<Block, FiniteDist>,
}

impl Simulator {
    pub fn new(instance_width: u8, seed_width: u8, map: BTreeMap<Block, FiniteDist>) -> Result<Self> {
        for (y, d) in &map {
            if y.is_bottom() || y.width() != instance_width {
                return Err(Error::InvalidSimulator(format!("instance {y} is not {instance_width} bits")));
            }
            if !seed_dist_ok(d, seed_width) {
                return Err(Error::InvalidSimulator(format!(
                    "output on {y} is over {:?}, expected a {seed_width}-bit seed",
                    d.widths()
                )));
            }
        }
        Ok(Simulator { instance_width, seed_width, map })
    }

    /// Deterministic simulator; `None` stands for ⊥.
    pub fn deterministic(instance_width: u8, seed_width: u8, choice: impl IntoIterator<Item = (Block, Option<Block>)>) -> Result<Self> {
        let map = choice
            .into_iter()
            .map(|(y, r)| Ok((y, FiniteDist::point(vec![seed_width], vec![r.unwrap_or_else(Block::bottom)])?)))
            .collect::<Result<_>>()?;
        Self::new(instance_width, seed_width, map)
    }

    /// Uniform over the seeds that map to each instance of `instances`
    /// (⊥ if there are none): the perfect simulator for `g`.
    pub fn posterior(g: &BlockGenerator, instances: impl IntoIterator<Item = Block>) -> Result<Self> {
        let two = g.two_block()?;
        let mut preimages: BTreeMap<Block, Vec<Outcome>> = BTreeMap::new();
        for r in two.seeds() {
            preimages.entry(two.eval(r)[0]).or_default().push(vec![r]);
        }
        let map = instances
            .into_iter()
            .map(|y| {
                let d = match preimages.get(&y) {
                    Some(rs) => FiniteDist::uniform_over(vec![g.seed_width()], rs.clone())?,
                    None => FiniteDist::point(vec![g.seed_width()], vec![Block::bottom()])?,
                };
                Ok((y, d))
            })
            .collect::<Result<_>>()?;
        Self::new(two.block_widths()[0], g.seed_width(), map)
    }

    /// Offline view `S(y) = (r̂_1 ‖ … ‖ r̂_k)` of an online simulator run on the
    /// first `k` blocks; any ⊥ collapses the whole output to ⊥.
    pub fn from_online(sim: &OnlineSimulator, k: usize, instances: impl IntoIterator<Item = Block>) -> Result<Self> {
        let widths = &sim.block_widths()[..k];
        let instance_width: u32 = widths.iter().map(|&w| w as u32).sum();
        let seed_width: u32 = sim.seed_widths()[..k].iter().map(|&s| s as u32).sum();
        if instance_width > 64 || seed_width > 64 {
            return Err(Error::WidthMismatch("offline view wider than 64 bits".into()));
        }
        let target = FiniteDist::uniform_over(widths.to_vec(), instances.into_iter().map(|y| y.split(widths)).collect::<Result<Vec<_>>>()?)?;
        let joint = sim.induced_joint(&target, k)?;
        let mut map: BTreeMap<Block, Vec<(Outcome, Prob)>> = BTreeMap::new();
        let mass = Prob::one() / Prob::from_integer(target.support_size().into());
        for (o, p) in joint.entries() {
            let r = if o[..k].iter().any(Block::is_bottom) { Block::bottom() } else { Block::concat(&o[..k])? };
            let y = Block::concat(&o[k..])?;
            map.entry(y).or_default().push((vec![r], p / &mass));
        }
        let map = map
            .into_iter()
            .map(|(y, entries)| Ok((y, FiniteDist::new(vec![seed_width as u8], entries)?)))
            .collect::<Result<_>>()?;
        Self::new(instance_width as u8, seed_width as u8, map)
    }

    pub fn instance_width(&self) -> u8 {
        self.instance_width
    }

    pub fn seed_width(&self) -> u8 {
        self.seed_width
    }

    pub fn map(&self) -> &BTreeMap<Block, FiniteDist> {
        &self.map
    }

    pub fn on(&self, y: &Block) -> Result<&FiniteDist> {
        self.map.get(y).ok_or_else(|| Error::OutOfSupport(format!("simulator undefined on instance {y}")))
    }

    /// Joint `(S(Y), Y, …)`: the simulator reads the first block of each
    /// outcome of `target` and its output is prepended.
    pub fn joint(&self, target: &FiniteDist) -> Result<FiniteDist> {
        let mut widths = vec![self.seed_width];
        widths.extend_from_slice(target.widths());
        let mut entries = Vec::new();
        for (o, p) in target.entries() {
            for (r, q) in self.on(&o[0])?.entries() {
                let mut x = r.clone();
                x.extend_from_slice(o);
                entries.push((x, p * q));
            }
        }
        FiniteDist::new(widths, entries)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Steps {
    /// `tables[i][(r̂_{<i}, y_i)]`
    Table(Vec<BTreeMap<(Outcome, Block), FiniteDist>>),
    Rejection { generator: OnlineGenerator, attempts: Attempts },
}

/// An online simulator: step `i` maps `(r̂_{<i}, y_i)` to a distribution over
/// `{0,1}^{s_i} ∪ {⊥}`. Once a step returns ⊥ every later step does too.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OnlineSimulator {
    seed_widths: Vec<u8>,
    block_widths: Vec<u8>,
    steps: Steps,
}

impl OnlineSimulator {
    /// Tabulate `f(i, r̂_{<i}, y_i)` over every ⊥-free prefix and every `y_i`.
    pub fn from_fn(
        seed_widths: Vec<u8>,
        block_widths: Vec<u8>,
        f: impl Fn(usize, &[Block], Block) -> FiniteDist,
    ) -> Result<Self> {
        if seed_widths.len() != block_widths.len() {
            return Err(Error::InvalidSimulator("seed and block widths differ in length".into()));
        }
        let mut tables = Vec::with_capacity(seed_widths.len());
        for i in 0..seed_widths.len() {
            let prefix_widths = &seed_widths[..i];
            let bits: u32 = prefix_widths.iter().map(|&s| s as u32).sum::<u32>() + block_widths[i] as u32;
            if bits > 20 {
                return Err(Error::InvalidSimulator(format!("step {i} table over 2^{bits} keys")));
            }
            let prefix_bits = bits - block_widths[i] as u32;
            let mut table = BTreeMap::new();
            for pv in 0..1u64 << prefix_bits {
                let prefix = Block::new(pv, prefix_bits as u8).split(prefix_widths)?;
                for yv in 0..1u64 << block_widths[i] {
                    let y = Block::new(yv, block_widths[i]);
                    let d = f(i, &prefix, y);
                    if !seed_dist_ok(&d, seed_widths[i]) {
                        return Err(Error::InvalidSimulator(format!(
                            "step {i} returns a distribution over {:?}, expected [{}]",
                            d.widths(),
                            seed_widths[i]
                        )));
                    }
                    table.insert((prefix.clone(), y), d);
                }
            }
            tables.push(table);
        }
        Ok(OnlineSimulator { seed_widths, block_widths, steps: Steps::Table(tables) })
    }

    pub(super) fn rejection(generator: OnlineGenerator, attempts: Attempts) -> Self {
        OnlineSimulator {
            seed_widths: generator.seed_widths().to_vec(),
            block_widths: generator.block_widths().to_vec(),
            steps: Steps::Rejection { generator, attempts },
        }
    }

    /// The simulator that samples `r̂_i` from the generator's true conditional
    /// `R̃_i | R̃_{<i} = r̂_{<i}, Ỹ_i = y_i` (⊥ when `y_i` is unreachable).
    pub fn posterior(g: &OnlineGenerator) -> Self {
        Self::rejection(g.clone(), Attempts::Unbounded)
    }

    pub fn num_steps(&self) -> usize {
        self.seed_widths.len()
    }

    pub fn seed_widths(&self) -> &[u8] {
        &self.seed_widths
    }

    pub fn block_widths(&self) -> &[u8] {
        &self.block_widths
    }

    /// Step `i` on ⊥-free prefix `r̂_{<i}` and observed block `y_i`.
    pub fn step(&self, i: usize, prefix: &[Block], y: Block) -> Result<FiniteDist> {
        if prefix.iter().any(Block::is_bottom) {
            return FiniteDist::point(vec![self.seed_widths[i]], vec![Block::bottom()]);
        }
        match &self.steps {
            Steps::Table(tables) => tables[i]
                .get(&(prefix.to_vec(), y))
                .cloned()
                .ok_or_else(|| Error::InvalidSimulator(format!("step {i} undefined on ({}, {y})", outcome_to_string(prefix)))),
            Steps::Rejection { generator, attempts } => rejection_step(generator, i, prefix, y, *attempts),
        }
    }

    /// Check `G̃_i(r̂_{≤i}) = y_i` for every non-⊥ output with positive mass.
    pub fn check_valid(&self, g: &OnlineGenerator) -> Result<()> {
        if g.seed_widths() != self.seed_widths.as_slice() || g.block_widths() != self.block_widths.as_slice() {
            return Err(Error::InvalidSimulator("simulator shape differs from the generator".into()));
        }
        let Steps::Table(tables) = &self.steps else {
            return Ok(());
        };
        for (i, table) in tables.iter().enumerate() {
            for ((prefix, y), d) in table {
                for r in d.support() {
                    if r[0].is_bottom() {
                        continue;
                    }
                    let mut full = prefix.clone();
                    full.push(r[0]);
                    if g.block(i, &full) != *y {
                        return Err(Error::InvalidSimulator(format!(
                            "step {i} proposes {} for {y} after {}",
                            r[0],
                            outcome_to_string(prefix)
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Joint `(R̂_1..R̂_k, target…)`: the simulator runs on the first `k`
    /// blocks of each target outcome, the remaining blocks are carried along.
    pub fn induced_joint(&self, target: &FiniteDist, k: usize) -> Result<FiniteDist> {
        if k > self.num_steps() || target.arity() < k || target.widths()[..k] != self.block_widths[..k] {
            return Err(Error::WidthMismatch(format!(
                "cannot simulate {k} blocks of a target over {:?}",
                target.widths()
            )));
        }
        let mut widths = self.seed_widths[..k].to_vec();
        widths.extend_from_slice(target.widths());
        let mut entries = Vec::new();
        for (y, py) in target.entries() {
            let mut paths: Vec<(Outcome, Prob)> = vec![(Vec::new(), py.clone())];
            for (i, yi) in y.iter().enumerate().take(k) {
                let mut next = Vec::with_capacity(paths.len());
                for (prefix, q) in paths {
                    for (r, pr) in self.step(i, &prefix, *yi)?.entries() {
                        let mut p2 = prefix.clone();
                        p2.push(r[0]);
                        next.push((p2, &q * pr));
                    }
                }
                paths = next;
            }
            for (mut r, q) in paths {
                r.extend_from_slice(y);
                entries.push((r, q));
            }
        }
        FiniteDist::new(widths, entries)
    }

    /// Probability the simulator outputs no ⊥ on the given instance blocks.
    pub fn success_mass(&self, y: &[Block]) -> Result<Prob> {
        let mut paths: Vec<(Outcome, Prob)> = vec![(Vec::new(), Prob::one())];
        for (i, yi) in y.iter().enumerate() {
            let mut next = Vec::new();
            for (prefix, q) in paths {
                for (r, pr) in self.step(i, &prefix, *yi)?.entries() {
                    if !r[0].is_bottom() {
                        let mut p2 = prefix.clone();
                        p2.push(r[0]);
                        next.push((p2, &q * pr));
                    }
                }
            }
            paths = next;
        }
        Ok(paths.into_iter().fold(Prob::zero(), |acc, (_, q)| acc + q))
    }
}
