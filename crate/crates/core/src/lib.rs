//! Desk-scale laboratory for computational-entropy notions.
//!
//! Every quantity is computed exactly over small finite domains: probabilities
//! are rationals, and only the final `log2` evaluation is a float. The crate is
//! split the same way the theory is layered:
//!
//! - [`probkit`]: finite distributions and information measures (entropy,
//!   relative entropy, their conditional and sample forms, quantiles).
//! - [`genkit`]: block generators, online generators, relations, search
//!   problems, and exhaustive generator families.
//! - [`simkit`]: offline and online simulators, including the bounded
//!   rejection-sampling simulator in exact and sampling forms.
//! - [`notions`]: every hardness / inaccessible-entropy notion as a functional
//!   of concrete objects, with full per-sample decompositions.
//! - [`reductions`]: constructive reductions, theorem verifiers, parameter
//!   calculators and brute-force search over adversary families.
//! - [`instances`]: the corpus of toy functions and distributions.

pub mod error;
pub mod genkit;
pub mod instances;
pub mod notions;
pub mod probkit;
pub mod reductions;
pub mod serial;
pub mod simkit;

pub use error::{Error, Result};
pub use probkit::{Block, FiniteDist, Outcome, Prob, SampleValue, TOLERANCE};
