//! Offline and online simulators, and the bounded rejection-sampling
//! simulator `Sim^{G̃,T}`.
//!
//! Simulators return seeds for a generator, or ⊥ ([`Block::bottom`](crate::Block::bottom)).

mod rejection;
mod simulator;

pub use rejection::{
    convexity_check, rejection_error_bound, rejection_error_samples, rejection_error_term, rejection_simulator_exact,
    rejection_simulator_sampling, success_probability, Attempts, RejectionConfig, SamplingSimulator, StepTrace,
};
pub use simulator::{OnlineSimulator, Simulator};
