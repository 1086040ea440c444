//! Comparison methods.
//!
//! The black-box optimizers treat `θ ↦ PR(θ)` (full feedback) or the sample
//! mean of `f(θ, z)` (sampled feedback) as an opaque function and always
//! evaluate cell centers. SequOOL and StroquOOL reuse the DOOP and SOOP
//! schedules with [`Representative::Center`].

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::doop::run_sequential;
use crate::environment::Environment;
use crate::partition::PartitionConfig;
use crate::run::{Budget, Representative, RunOutput};
use crate::soop::run_stochastic;
use crate::{Error, Result};

pub mod soo;
pub mod stosoo;
pub mod zooming;

pub use soo::{run_soo, SooRun};
pub use stosoo::{run_stosoo, StoSooParams, StoSooRun};
pub use zooming::{run_szooming, FeedbackMode, GridArm, Zooming, ZoomingParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlackBox {
    Soo,
    StoSoo,
    SequOol,
    StroquOol,
}

impl BlackBox {
    pub const ALL: [BlackBox; 4] = [BlackBox::Soo, BlackBox::StoSoo, BlackBox::SequOol, BlackBox::StroquOol];

    pub fn name(self) -> &'static str {
        match self {
            BlackBox::Soo => "soo",
            BlackBox::StoSoo => "stosoo",
            BlackBox::SequOol => "sequool",
            BlackBox::StroquOol => "stroquool",
        }
    }

    /// Whether the method consumes sampled feedback.
    pub fn is_stochastic(self) -> bool {
        matches!(self, BlackBox::StoSoo | BlackBox::StroquOol)
    }
}

impl fmt::Display for BlackBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BlackBox {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BlackBox::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown black-box optimizer `{s}`")))
    }
}

/// Runs the named black-box optimizer. `m0` and `stosoo` only matter for the
/// stochastic variants.
pub fn run_blackbox<E: Environment>(
    name: BlackBox,
    env: &mut E,
    budget: Budget,
    config: &PartitionConfig,
    m0: usize,
    stosoo: &StoSooParams,
) -> Result<RunOutput> {
    Ok(match name {
        BlackBox::Soo => run_soo(env, budget, config)?.output,
        BlackBox::SequOol => run_sequential(env, budget, config, Representative::Center)?.output,
        BlackBox::StoSoo => run_stosoo(env, budget, m0, config, stosoo)?.output,
        BlackBox::StroquOol => run_stochastic(env, budget, m0, config, Representative::Center)?.output,
    })
}
