//! Parameter-free optimistic tree search for performative risk minimization.
//!
//! The data distribution a decision faces depends on the decision itself. After
//! deploying `θ` the learner observes either the full distribution `𝒟(θ)` or a
//! batch of samples from it, and uses that feedback to pick representatives for
//! the cells of a hierarchical partition of the decision box. [`doop`] covers
//! the full-feedback setting, [`soop`] the sampled one. [`baselines`] holds the
//! black-box optimistic optimizers and the confidence-bound zooming method used
//! for comparison, [`environment`] the synthetic decision-dependent problems,
//! [`metrics`] the regret bookkeeping and [`analysis`] the theory-side calculators.

pub mod analysis;
pub mod baselines;
pub mod doop;
pub mod environment;
mod error;
pub mod metrics;
pub mod partition;
pub mod run;
pub mod soop;

pub use error::{Error, Result};
