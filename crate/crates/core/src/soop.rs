//! Stochastic optimistic optimization with performative feedback (SOOP).
//!
//! Sampled-feedback setting: each deployment returns `m0` draws. The search
//! follows the StroquOOL schedule. Cells carry `n_deploy` (how many times
//! their representative was deployed) and `n_open` (how many times each child
//! was deployed when the cell was opened); exploration at depth `h` and pass
//! `p` opens the `⌊h_max/(h·2^p)⌋` best unopened cells with `n_deploy ≥ 2^p`,
//! and a cross-validation phase re-deploys one candidate per `p`.

use serde::{Deserialize, Serialize};

use crate::doop::by_value_then_cell;
use crate::environment::{empirical_dpr, Environment, SampleSet};
use crate::partition::{self, Cell, PartitionConfig};
use crate::run::{Budget, Ledger, Representative, RunOutput, Site};
use crate::{Error, Result};

/// `h_max = ⌊T / (2^{D+1} (log₂T + 1)²)⌋` and `p_max = ⌊log₂ h_max⌋`.
pub fn soop_budgets(horizon: usize, dim: usize) -> Result<(usize, usize)> {
    let too_small = Error::BudgetTooSmall { horizon, dim };
    if horizon < 2 || dim == 0 || dim >= 62 {
        return Err(too_small);
    }
    let log = (horizon as f64).log2() + 1.0;
    let h_max = (horizon as f64 / ((1u64 << (dim + 1)) as f64 * log * log)).floor() as usize;
    if h_max == 0 {
        return Err(too_small);
    }
    Ok((h_max, floor_log2(h_max)))
}

fn floor_log2(n: usize) -> usize {
    (usize::BITS - 1 - n.leading_zeros()) as usize
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoopRecord {
    pub cell: Cell,
    pub theta: Vec<f64>,
    pub samples: SampleSet,
    pub n_deploy: usize,
    pub n_open: usize,
    /// `ĎPR(θ, θ)` from the cell's own samples.
    pub empirical_pr: f64,
    pub children: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Init,
    Exploration,
    Validation,
}

/// Deployments spent per phase.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseCounters {
    pub init: usize,
    pub exploration: usize,
    pub validation: usize,
}

impl PhaseCounters {
    pub fn total(&self) -> usize {
        self.init + self.exploration + self.validation
    }
}

/// One cross-validation candidate `θ_T(p)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Validation {
    pub p: usize,
    pub record: usize,
    pub theta: Vec<f64>,
    pub deployments: usize,
    /// Mean loss over the fresh validation samples.
    pub estimate: f64,
}

#[derive(Debug, Clone)]
pub struct SoopState {
    pub h_max: usize,
    pub p_max: usize,
    pub m0: usize,
    pub records: Vec<SoopRecord>,
    pub counters: PhaseCounters,
    pub validations: Vec<Validation>,
    layers: Vec<Vec<usize>>,
    ledger: Ledger,
    phase: Phase,
    rule: Representative,
    config: PartitionConfig,
}

impl SoopState {
    pub fn new(
        h_max: usize,
        p_max: usize,
        m0: usize,
        budget: Budget,
        config: PartitionConfig,
        rule: Representative,
    ) -> Self {
        Self {
            h_max,
            p_max,
            m0,
            records: Vec::new(),
            counters: PhaseCounters::default(),
            validations: Vec::new(),
            layers: Vec::new(),
            ledger: Ledger::new(budget.cap),
            phase: Phase::Init,
            rule,
            config,
        }
    }

    pub fn deployments_used(&self) -> usize {
        self.ledger.used()
    }

    pub fn layer(&self, depth: usize) -> &[usize] {
        self.layers.get(depth).map_or(&[], Vec::as_slice)
    }

    pub fn set_phase(&mut self, phase: Phase) {
        self.phase = phase;
    }

    fn count(&mut self) {
        match self.phase {
            Phase::Init => self.counters.init += 1,
            Phase::Exploration => self.counters.exploration += 1,
            Phase::Validation => self.counters.validation += 1,
        }
    }

    fn add_record(&mut self, cell: Cell, theta: Vec<f64>) -> usize {
        let depth = cell.depth() as usize;
        if self.layers.len() <= depth {
            self.layers.resize_with(depth + 1, Vec::new);
        }
        let id = self.records.len();
        self.layers[depth].push(id);
        self.records.push(SoopRecord {
            samples: SampleSet::new(theta.clone()),
            cell,
            theta,
            n_deploy: 0,
            n_open: 0,
            empirical_pr: f64::INFINITY,
            children: Vec::new(),
        });
        id
    }

    /// Deploys record `id` up to `times` more times; returns how many happened.
    fn deploy<E: Environment>(&mut self, env: &mut E, id: usize, times: usize) -> Result<usize> {
        let done = times.min(self.ledger.remaining());
        for _ in 0..done {
            let rec = &mut self.records[id];
            env.deploy_sample(&rec.theta, self.m0, &mut rec.samples)?;
            self.ledger.push(&rec.theta, Site::of(&rec.cell), self.m0);
            self.count();
        }
        if done > 0 {
            let rec = &self.records[id];
            let pr = empirical_dpr(env, &rec.samples, &rec.theta)?;
            let rec = &mut self.records[id];
            rec.n_deploy += done;
            rec.empirical_pr = pr;
        }
        Ok(done)
    }

    /// Deploys the root's center `n` times.
    pub fn deploy_root<E: Environment>(&mut self, env: &mut E, n: usize) -> Result<usize> {
        if n == 0 || self.ledger.exhausted() {
            return Err(Error::InvalidInput("root needs at least one deployment".into()));
        }
        let cell = partition::root(env.dim());
        let theta = env.domain().to_original(&cell.center());
        let id = self.add_record(cell, theta);
        self.deploy(env, id, n)?;
        Ok(id)
    }

    fn representative<E: Environment>(&self, env: &E, parent: usize, child: &Cell) -> Result<Vec<f64>> {
        match self.rule {
            Representative::Center => Ok(env.domain().to_original(&child.center())),
            Representative::Performative => {
                let samples = &self.records[parent].samples;
                let mut best: Option<(f64, Vec<f64>)> = None;
                for unit in child.candidate_points(self.config.candidates, self.config.salt) {
                    let point = env.domain().to_original(&unit);
                    let value = empirical_dpr(env, samples, &point)?;
                    if best.as_ref().is_none_or(|(v, _)| value < *v) {
                        best = Some((value, point));
                    }
                }
                Ok(best.expect("at least one candidate").1)
            }
        }
    }

    /// Smallest `(empirical PR, depth, index)` among records passing `keep`.
    fn argmin_where(&self, keep: impl Fn(&SoopRecord) -> bool) -> Option<usize> {
        (0..self.records.len()).filter(|&i| keep(&self.records[i])).min_by(|&a, &b| {
            let (ra, rb) = (&self.records[a], &self.records[b]);
            by_value_then_cell((ra.empirical_pr, &ra.cell), (rb.empirical_pr, &rb.cell))
        })
    }
}

/// `Open(𝒫, n)`: sets `n_open ← n` and deploys each child's representative
/// `n` times. Re-opening with a larger `n` tops existing children up to `n`
/// deployments and keeps their representatives. Returns `false` when the cap
/// stopped it part-way.
pub fn open_stochastic<E: Environment>(state: &mut SoopState, env: &mut E, id: usize, n: usize) -> Result<bool> {
    if n == 0 {
        return Err(Error::InvalidInput("open needs n >= 1".into()));
    }
    if state.records[id].n_deploy == 0 {
        return Err(Error::InvalidInput("cannot open a cell that was never deployed".into()));
    }
    if state.records[id].n_open >= n {
        return Ok(true);
    }
    state.records[id].n_open = n;
    if state.records[id].children.is_empty() {
        for child in state.records[id].cell.children() {
            if state.ledger.exhausted() {
                return Ok(false);
            }
            let theta = state.representative(env, id, &child)?;
            let child_id = state.add_record(child, theta);
            state.records[id].children.push(child_id);
            if state.deploy(env, child_id, n)? < n {
                return Ok(false);
            }
        }
    } else {
        for child_id in state.records[id].children.clone() {
            let missing = n.saturating_sub(state.records[child_id].n_deploy);
            if state.deploy(env, child_id, missing)? < missing {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[derive(Debug, Clone)]
pub struct SoopRun {
    pub output: RunOutput,
    pub state: SoopState,
    /// `p` whose candidate was returned, when cross-validation ran.
    pub chosen_p: Option<usize>,
}

pub fn run_soop<E: Environment>(env: &mut E, budget: Budget, m0: usize, config: &PartitionConfig) -> Result<SoopRun> {
    run_stochastic(env, budget, m0, config, Representative::Performative)
}

/// The SOOP schedule with a chosen representative rule.
/// [`Representative::Center`] is StroquOOL.
pub fn run_stochastic<E: Environment>(
    env: &mut E,
    budget: Budget,
    m0: usize,
    config: &PartitionConfig,
    rule: Representative,
) -> Result<SoopRun> {
    config.validate()?;
    if m0 == 0 {
        return Err(Error::InvalidInput("m0 must be at least 1".into()));
    }
    let dim = env.dim();
    let (h_max, p_max) = soop_budgets(budget.horizon, dim)?;
    let depth_limit = config.depth_limit(dim) as usize;
    let mut state = SoopState::new(h_max, p_max, m0, budget, config.clone(), rule);

    state.set_phase(Phase::Init);
    let root = state.deploy_root(env, h_max)?;
    state.set_phase(Phase::Exploration);
    let mut complete = state.records[root].n_deploy == h_max && open_stochastic(&mut state, env, root, h_max)?;

    'explore: for h in 1..=h_max {
        if !complete || h >= depth_limit {
            break;
        }
        let top = floor_log2(h_max / h);
        for p in (0..=top).rev() {
            let quota = h_max / (h << p);
            let mut eligible: Vec<usize> = state
                .layer(h)
                .iter()
                .copied()
                .filter(|&i| state.records[i].n_open == 0 && state.records[i].n_deploy >= 1 << p)
                .collect();
            eligible.sort_by(|&a, &b| {
                let (ra, rb) = (&state.records[a], &state.records[b]);
                by_value_then_cell((ra.empirical_pr, &ra.cell), (rb.empirical_pr, &rb.cell))
            });
            eligible.truncate(quota);
            for id in eligible {
                debug_assert_eq!(state.records[id].n_open, 0);
                complete = open_stochastic(&mut state, env, id, 1 << p)?;
                if !complete {
                    break 'explore;
                }
            }
        }
    }

    let mut chosen_p = None;
    let best = if complete {
        state.set_phase(Phase::Validation);
        for p in 0..=p_max {
            if state.ledger.exhausted() {
                break;
            }
            let Some(id) = state.argmin_where(|r| r.n_deploy >= 1 << p) else { continue };
            let theta = state.records[id].theta.clone();
            let mut fresh = SampleSet::new(theta.clone());
            let done = h_max.min(state.ledger.remaining());
            for _ in 0..done {
                env.deploy_sample(&theta, m0, &mut fresh)?;
                state.ledger.push(&theta, Site::of(&state.records[id].cell), m0);
                state.count();
            }
            let estimate = empirical_dpr(env, &fresh, &theta)?;
            state.validations.push(Validation { p, record: id, theta, deployments: done, estimate });
        }
        let pick = state.validations.iter().min_by(|a, b| a.estimate.total_cmp(&b.estimate).then(a.p.cmp(&b.p)));
        chosen_p = pick.map(|v| v.p);
        pick.map(|v| v.record)
    } else {
        None
    };
    let best = match best {
        Some(id) => id,
        None => {
            let most = state.records.iter().map(|r| r.n_deploy).max().unwrap_or(0);
            state.argmin_where(|r| r.n_deploy == most).expect("root was deployed")
        }
    };

    let record = &state.records[best];
    let output = RunOutput {
        best: record.theta.clone(),
        best_site: Site::of(&record.cell),
        deployments: state.ledger.clone().into_log(),
    };
    Ok(SoopRun { output, state, chosen_p })
}
