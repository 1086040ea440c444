//! Deterministic optimistic optimization with performative feedback (DOOP).
//!
//! Full-feedback setting. The search follows the SequOOL schedule: after
//! opening the root, depth `h` opens the `⌊h_max/h⌋` evaluated cells with the
//! smallest performative risk. Opening a cell deploys one representative per
//! child, chosen by minimizing the parent's decoupled risk over the child's
//! candidate points.

use serde::{Deserialize, Serialize};
use std::cmp::Ordering;

use crate::environment::{DistributionHandle, Environment};
use crate::partition::{self, Cell, PartitionConfig};
use crate::run::{Budget, Ledger, Representative, RunOutput, Site};
use crate::{Error, Result};

/// `⌊T / (2^D · H_T)⌋` with `H_T` the `T`-th harmonic number.
pub fn doop_hmax(horizon: usize, dim: usize) -> Result<usize> {
    let too_small = Error::BudgetTooSmall { horizon, dim };
    if horizon < 2 || dim == 0 || dim >= 63 {
        return Err(too_small);
    }
    let hmax = (horizon as f64 / ((1u64 << dim) as f64 * harmonic(horizon))).floor() as usize;
    if hmax == 0 {
        return Err(too_small);
    }
    Ok(hmax)
}

/// `Σ_{t=1}^{n} 1/t` by direct summation.
pub fn harmonic(n: usize) -> f64 {
    (1..=n).map(|t| 1.0 / t as f64).sum()
}

/// An evaluated cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub cell: Cell,
    /// Representative decision in original coordinates.
    pub theta: Vec<f64>,
    /// `PR(θ)` read off the representative's own distribution.
    pub pr: f64,
    pub opened: bool,
}

/// Total order used for "smallest values": `(PR, depth, index)`.
pub(crate) fn by_value_then_cell(a: (f64, &Cell), b: (f64, &Cell)) -> Ordering {
    a.0.total_cmp(&b.0).then_with(|| a.1.cmp(b.1))
}

/// Search tree of a DOOP-style run.
#[derive(Debug, Clone)]
pub struct DoopState<H> {
    pub h_max: usize,
    pub records: Vec<CellRecord>,
    handles: Vec<H>,
    layers: Vec<Vec<usize>>,
    ledger: Ledger,
    rule: Representative,
    config: PartitionConfig,
    openings: usize,
}

impl<H: DistributionHandle> DoopState<H> {
    pub fn new(h_max: usize, budget: Budget, config: PartitionConfig, rule: Representative) -> Self {
        Self {
            h_max,
            records: Vec::new(),
            handles: Vec::new(),
            layers: Vec::new(),
            ledger: Ledger::new(budget.cap),
            rule,
            config,
            openings: 0,
        }
    }

    pub fn deployments_used(&self) -> usize {
        self.ledger.used()
    }

    /// Number of `open_full` calls that started.
    pub fn openings(&self) -> usize {
        self.openings
    }

    /// Record ids of evaluated cells at `depth`, in evaluation order.
    pub fn layer(&self, depth: usize) -> &[usize] {
        self.layers.get(depth).map_or(&[], Vec::as_slice)
    }

    pub fn handle(&self, id: usize) -> &H {
        &self.handles[id]
    }

    fn push(&mut self, cell: Cell, theta: Vec<f64>, handle: H) -> Result<usize> {
        let pr = handle.dpr(&theta)?;
        self.ledger.push(&theta, Site::of(&cell), 0);
        let depth = cell.depth() as usize;
        if self.layers.len() <= depth {
            self.layers.resize_with(depth + 1, Vec::new);
        }
        let id = self.records.len();
        self.layers[depth].push(id);
        self.records.push(CellRecord { cell, theta, pr, opened: false });
        self.handles.push(handle);
        Ok(id)
    }

    /// Deploys the root's center.
    pub fn deploy_root<E: Environment<Handle = H>>(&mut self, env: &mut E) -> Result<usize> {
        if self.ledger.exhausted() {
            return Err(Error::InvalidInput("deployment cap is zero".into()));
        }
        let cell = partition::root(env.dim());
        let theta = env.domain().to_original(&cell.center());
        let handle = env.deploy_full(&theta)?;
        self.push(cell, theta, handle)
    }

    fn best(&self) -> Option<usize> {
        (0..self.records.len()).min_by(|&a, &b| {
            let (ra, rb) = (&self.records[a], &self.records[b]);
            by_value_then_cell((ra.pr, &ra.cell), (rb.pr, &rb.cell))
        })
    }
}

/// Opens record `id`: picks, deploys and records a representative in each of
/// its children. Returns `false` if the deployment cap stopped it part-way;
/// children deployed before that are kept.
pub fn open_full<E: Environment>(state: &mut DoopState<E::Handle>, env: &mut E, id: usize) -> Result<bool> {
    if state.records[id].opened {
        return Err(Error::InvalidInput(format!("cell {:?} is already open", state.records[id].cell)));
    }
    state.records[id].opened = true;
    state.openings += 1;
    let parent = state.records[id].cell.clone();
    for child in parent.children() {
        if state.ledger.exhausted() {
            return Ok(false);
        }
        let theta = match state.rule {
            Representative::Center => env.domain().to_original(&child.center()),
            Representative::Performative => {
                let handle = &state.handles[id];
                let mut best: Option<(f64, Vec<f64>)> = None;
                for unit in child.candidate_points(state.config.candidates, state.config.salt) {
                    let point = env.domain().to_original(&unit);
                    let value = handle.dpr(&point)?;
                    if best.as_ref().is_none_or(|(v, _)| value < *v) {
                        best = Some((value, point));
                    }
                }
                best.expect("at least one candidate").1
            }
        };
        let handle = env.deploy_full(&theta)?;
        state.push(child, theta, handle)?;
    }
    Ok(true)
}

/// Output of [`run_doop`].
#[derive(Debug, Clone)]
pub struct DoopRun<H> {
    pub output: RunOutput,
    pub state: DoopState<H>,
    /// Returned decision's performative risk as seen by the algorithm.
    pub best_pr: f64,
}

/// DOOP with the default representative rule.
pub fn run_doop<E: Environment>(env: &mut E, budget: Budget, config: &PartitionConfig) -> Result<DoopRun<E::Handle>> {
    run_sequential(env, budget, config, Representative::Performative)
}

/// The DOOP schedule with a chosen representative rule.
/// [`Representative::Center`] is SequOOL.
pub fn run_sequential<E: Environment>(
    env: &mut E,
    budget: Budget,
    config: &PartitionConfig,
    rule: Representative,
) -> Result<DoopRun<E::Handle>> {
    config.validate()?;
    let dim = env.dim();
    let h_max = doop_hmax(budget.horizon, dim)?;
    let depth_limit = config.depth_limit(dim) as usize;
    let mut state = DoopState::new(h_max, budget, config.clone(), rule);

    let root = state.deploy_root(env)?;
    let mut complete = open_full(&mut state, env, root)?;
    for h in 1..=h_max {
        if !complete || h >= depth_limit {
            break;
        }
        let mut eligible: Vec<usize> = state.layer(h).iter().copied().filter(|&id| !state.records[id].opened).collect();
        eligible.sort_by(|&a, &b| {
            let (ra, rb) = (&state.records[a], &state.records[b]);
            by_value_then_cell((ra.pr, &ra.cell), (rb.pr, &rb.cell))
        });
        eligible.truncate(h_max / h);
        for id in eligible {
            complete = open_full(&mut state, env, id)?;
            if !complete {
                break;
            }
        }
    }

    let best = state.best().expect("root was deployed");
    let record = &state.records[best];
    let output = RunOutput {
        best: record.theta.clone(),
        best_site: Site::of(&record.cell),
        deployments: state.ledger.clone().into_log(),
    };
    let best_pr = record.pr;
    Ok(DoopRun { output, state, best_pr })
}
