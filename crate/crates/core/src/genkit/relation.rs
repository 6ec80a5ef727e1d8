use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::probkit::{Block, FiniteDist};

/// A finite binary relation Π between instances and witnesses.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Relation {
    instance_width: u8,
    witness_width: u8,
    pairs: BTreeSet<(Block, Block)>,
    witnesses: BTreeMap<Block, Vec<Block>>,
}

impl Relation {
    pub fn new(instance_width: u8, witness_width: u8, pairs: impl IntoIterator<Item = (Block, Block)>) -> Result<Self> {
        let pairs: BTreeSet<(Block, Block)> = pairs.into_iter().collect();
        if let Some((y, w)) = pairs
            .iter()
            .find(|(y, w)| y.is_bottom() || w.is_bottom() || y.width() != instance_width || w.width() != witness_width)
        {
            return Err(Error::WidthMismatch(format!(
                "pair ({y}, {w}) does not match widths ({instance_width}, {witness_width})"
            )));
        }
        let mut witnesses: BTreeMap<Block, Vec<Block>> = BTreeMap::new();
        for (y, w) in &pairs {
            witnesses.entry(*y).or_default().push(*w);
        }
        Ok(Relation { instance_width, witness_width, pairs, witnesses })
    }

    pub fn instance_width(&self) -> u8 {
        self.instance_width
    }

    pub fn witness_width(&self) -> u8 {
        self.witness_width
    }

    pub fn contains(&self, y: &Block, w: &Block) -> bool {
        self.pairs.contains(&(*y, *w))
    }

    pub fn pairs(&self) -> impl Iterator<Item = &(Block, Block)> {
        self.pairs.iter()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// L_Π, in increasing order.
    pub fn language(&self) -> impl Iterator<Item = &Block> {
        self.witnesses.keys()
    }

    pub fn in_language(&self, y: &Block) -> bool {
        self.witnesses.contains_key(y)
    }

    pub fn witnesses(&self, y: &Block) -> &[Block] {
        self.witnesses.get(y).map_or(&[], |v| v.as_slice())
    }

    /// True if every outcome of a two-block `(Y, W)` distribution is in Π.
    pub fn supports(&self, yw: &FiniteDist) -> bool {
        yw.widths() == [self.instance_width, self.witness_width]
            && yw.support().all(|o| self.contains(&o[0], &o[1]))
    }
}

/// A distributional search problem (Π, Y).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SearchProblem {
    relation: Relation,
    instances: FiniteDist,
}

impl SearchProblem {
    pub fn new(relation: Relation, instances: FiniteDist) -> Result<Self> {
        if instances.widths() != [relation.instance_width] {
            return Err(Error::WidthMismatch(format!(
                "instance distribution over {:?}, relation instances are {} bits",
                instances.widths(),
                relation.instance_width
            )));
        }
        if let Some(o) = instances.support().find(|o| !relation.in_language(&o[0])) {
            return Err(Error::InvalidDistribution(format!("instance {} has no witness", o[0])));
        }
        Ok(SearchProblem { relation, instances })
    }

    pub fn relation(&self) -> &Relation {
        &self.relation
    }

    pub fn instances(&self) -> &FiniteDist {
        &self.instances
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(s: &str) -> Block {
        Block::parse(s).unwrap()
    }

    #[test]
    fn language_and_lookup() {
        let rel = Relation::new(1, 2, [(b("0"), b("00")), (b("0"), b("01")), (b("1"), b("11"))]).unwrap();
        assert!(rel.contains(&b("0"), &b("01")));
        assert!(!rel.contains(&b("1"), &b("01")));
        assert_eq!(rel.language().copied().collect::<Vec<_>>(), vec![b("0"), b("1")]);
        assert_eq!(rel.witnesses(&b("0")), &[b("00"), b("01")]);
        assert!(rel.witnesses(&b("1")).len() == 1);
    }

    #[test]
    fn rejects_bad_widths_and_instances() {
        assert!(Relation::new(1, 2, [(b("0"), b("0"))]).is_err());
        let rel = Relation::new(1, 1, [(b("0"), b("0"))]).unwrap();
        let y = FiniteDist::uniform(vec![1]);
        assert!(SearchProblem::new(rel.clone(), y).is_err());
        let y = FiniteDist::point(vec![1], vec![b("0")]).unwrap();
        assert!(SearchProblem::new(rel, y).is_ok());
    }
}
