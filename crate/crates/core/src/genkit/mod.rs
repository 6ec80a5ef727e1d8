//! Generators, relations and search problems as explicit finite tables.
//!
//! An `(m+1)`-block generator supported on a relation emits the instance in
//! its first `m` blocks and the witness in the last one. Instances are
//! compared against a [`Relation`] as the concatenation of those `m` blocks.

mod family;
mod generator;
mod relation;

pub use family::{FamilyMode, GeneratorFamily};
pub use generator::{merge_blocks, partition_blocks, BlockGenerator, OnlineGenerator, MAX_SEED_BITS};
pub use relation::{Relation, SearchProblem};
