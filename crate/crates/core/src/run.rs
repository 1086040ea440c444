//! Types shared by every optimizer: budgets, the deployment log and the
//! representative rule.

use serde::{Deserialize, Serialize};

use crate::partition::Cell;

/// Horizon `T` drives the schedule; `cap` is the hard limit on deployments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    pub horizon: usize,
    pub cap: usize,
}

impl Budget {
    pub fn new(horizon: usize) -> Self {
        Self { horizon, cap: horizon }
    }

    pub fn capped(horizon: usize, cap: usize) -> Self {
        Self { horizon, cap }
    }
}

/// Where a deployed decision came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Site {
    Cell { depth: u32, index: u128 },
    Arm(usize),
}

impl Site {
    pub fn of(cell: &Cell) -> Self {
        Site::Cell { depth: cell.depth(), index: cell.index() }
    }
}

/// One deployment, as seen by the algorithm. Regret is attached later by the
/// evaluation side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Deployment {
    pub theta: Vec<f64>,
    pub site: Site,
    /// Samples drawn by this deployment (0 under full feedback).
    pub samples: usize,
}

/// Result common to all optimizers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutput {
    pub best: Vec<f64>,
    pub best_site: Site,
    pub deployments: Vec<Deployment>,
}

/// How a cell's representative decision is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Representative {
    /// Minimize the parent's (empirical) decoupled risk over candidate points.
    Performative,
    /// Use the cell center (black-box optimistic optimization).
    Center,
}

/// Deployment log with a hard cap.
#[derive(Debug, Clone)]
pub(crate) struct Ledger {
    cap: usize,
    log: Vec<Deployment>,
}

impl Ledger {
    pub(crate) fn new(cap: usize) -> Self {
        Self { cap, log: Vec::new() }
    }

    pub(crate) fn exhausted(&self) -> bool {
        self.log.len() >= self.cap
    }

    pub(crate) fn remaining(&self) -> usize {
        self.cap.saturating_sub(self.log.len())
    }

    pub(crate) fn used(&self) -> usize {
        self.log.len()
    }

    pub(crate) fn push(&mut self, theta: &[f64], site: Site, samples: usize) {
        debug_assert!(!self.exhausted());
        self.log.push(Deployment { theta: theta.to_vec(), site, samples });
    }

    pub(crate) fn into_log(self) -> Vec<Deployment> {
        self.log
    }
}
