//! Performative-confidence-bound zooming over a finite grid of decisions.
//!
//! Every deployed decision `s` bounds the risk of every arm `θ'`:
//!
//! ```text
//! max_s { DPR(s, θ') − L_z·ε·‖s − θ'‖^α } ≤ PR(θ') ≤ min_s { DPR(s, θ') + L_z·ε·‖s − θ'‖^α }
//! ```
//!
//! Each step deploys the active arm with the smallest lower bound, recomputes
//! every arm's bounds from all deployed decisions, and eliminates arms whose
//! lower bound exceeds the smallest active upper bound. The selection rule is
//! a reconstruction; only the bounds themselves are standard. With sampled
//! feedback the decoupled risks are empirical and both bounds are widened by
//! `2·σ̂_s/√n_s`, where `σ̂_s` is the standard deviation of `f(s, z)` over the
//! `n_s` samples pooled at `s`.

use serde::{Deserialize, Serialize};

use crate::environment::{euclidean, DistributionHandle, Environment, SampleSet};
use crate::run::{Budget, Ledger, RunOutput, Site};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedbackMode {
    Full,
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoomingParams {
    pub lz: f64,
    pub epsilon: f64,
    pub alpha: f64,
    pub mode: FeedbackMode,
    pub m0: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridArm {
    pub theta: Vec<f64>,
    pub lower: f64,
    pub upper: f64,
    pub active: bool,
    pub deployments: usize,
}

#[derive(Debug, Clone)]
struct Source {
    arm: usize,
    /// Full feedback: `DPR(s, θ')` per arm. Sampled: `Σ_j f(θ', z_j)` per arm.
    row: Vec<f64>,
    samples: SampleSet,
    own_sum: f64,
    own_sq: f64,
}

impl Source {
    fn count(&self) -> usize {
        self.samples.len()
    }
}

/// Step-wise zooming state.
#[derive(Debug, Clone)]
pub struct Zooming {
    params: ZoomingParams,
    arms: Vec<GridArm>,
    sources: Vec<Source>,
    source_of: Vec<Option<usize>>,
    ledger: Ledger,
}

impl Zooming {
    pub fn new(grid: Vec<Vec<f64>>, params: ZoomingParams, budget: Budget) -> Result<Self> {
        if grid.is_empty() {
            return Err(Error::InvalidInput("zooming grid is empty".into()));
        }
        if !(params.lz >= 0.0 && params.epsilon >= 0.0 && params.alpha > 0.0) {
            return Err(Error::InvalidInput("L_z and epsilon must be >= 0 and alpha > 0".into()));
        }
        if params.mode == FeedbackMode::Sampled && params.m0 == 0 {
            return Err(Error::InvalidInput("m0 must be at least 1".into()));
        }
        let n = grid.len();
        let arms = grid
            .into_iter()
            .map(|theta| GridArm {
                theta,
                lower: f64::NEG_INFINITY,
                upper: f64::INFINITY,
                active: true,
                deployments: 0,
            })
            .collect();
        Ok(Self { params, arms, sources: Vec::new(), source_of: vec![None; n], ledger: Ledger::new(budget.cap) })
    }

    pub fn arms(&self) -> &[GridArm] {
        &self.arms
    }

    pub fn deployments_used(&self) -> usize {
        self.ledger.used()
    }

    /// Active arm with the smallest lower bound, ties to the smallest index.
    pub fn select(&self) -> Option<usize> {
        (0..self.arms.len())
            .filter(|&i| self.arms[i].active)
            .min_by(|&a, &b| self.arms[a].lower.total_cmp(&self.arms[b].lower).then(a.cmp(&b)))
    }

    /// Deploys the selected arm and refreshes all bounds. `None` once the cap
    /// is hit or no arm is active.
    pub fn step<E: Environment>(&mut self, env: &mut E) -> Result<Option<usize>> {
        if self.ledger.exhausted() {
            return Ok(None);
        }
        let Some(arm) = self.select() else { return Ok(None) };
        self.deploy(env, arm)?;
        self.refresh_bounds();
        Ok(Some(arm))
    }

    fn deploy<E: Environment>(&mut self, env: &mut E, arm: usize) -> Result<()> {
        let theta = self.arms[arm].theta.clone();
        let src = match self.source_of[arm] {
            Some(s) => s,
            None => {
                let s = self.sources.len();
                self.sources.push(Source {
                    arm,
                    row: vec![0.0; self.arms.len()],
                    samples: SampleSet::new(theta.clone()),
                    own_sum: 0.0,
                    own_sq: 0.0,
                });
                self.source_of[arm] = Some(s);
                s
            }
        };
        match self.params.mode {
            FeedbackMode::Full => {
                let handle = env.deploy_full(&theta)?;
                if self.arms[arm].deployments == 0 {
                    for (slot, a) in self.sources[src].row.iter_mut().zip(&self.arms) {
                        *slot = handle.dpr(&a.theta)?;
                    }
                }
                self.ledger.push(&theta, Site::Arm(arm), 0);
            }
            FeedbackMode::Sampled => {
                let m0 = self.params.m0;
                let source = &mut self.sources[src];
                let start = source.samples.len();
                env.deploy_sample(&theta, m0, &mut source.samples)?;
                let fresh = &source.samples.samples()[start..];
                for (slot, a) in source.row.iter_mut().zip(&self.arms) {
                    *slot += fresh.iter().map(|&z| env.loss(&a.theta, z)).sum::<f64>();
                }
                for &z in fresh {
                    let own = env.loss(&theta, z);
                    source.own_sum += own;
                    source.own_sq += own * own;
                }
                self.ledger.push(&theta, Site::Arm(arm), m0);
            }
        }
        self.arms[arm].deployments += 1;
        Ok(())
    }

    /// Decoupled risk estimate of arm `target` under source `s`, and the
    /// source's estimation slack.
    fn estimate(&self, s: &Source, target: usize) -> (f64, f64) {
        match self.params.mode {
            FeedbackMode::Full => (s.row[target], 0.0),
            FeedbackMode::Sampled => {
                let n = s.count() as f64;
                let mean = s.own_sum / n;
                let var = if s.count() > 1 { ((s.own_sq - n * mean * mean) / (n - 1.0)).max(0.0) } else { 0.0 };
                (s.row[target] / n, 2.0 * var.sqrt() / n.sqrt())
            }
        }
    }

    /// Recomputes every active arm's bounds from all deployed decisions, then
    /// eliminates arms whose lower bound exceeds the smallest active upper bound.
    pub fn refresh_bounds(&mut self) {
        let scale = self.params.lz * self.params.epsilon;
        let slacks: Vec<f64> = self.sources.iter().map(|s| self.estimate(s, s.arm).1).collect();
        for target in 0..self.arms.len() {
            if !self.arms[target].active {
                continue;
            }
            let (mut lower, mut upper) = (f64::NEG_INFINITY, f64::INFINITY);
            for (s, slack) in self.sources.iter().zip(&slacks) {
                let value = self.estimate(s, target).0;
                let dist = euclidean(&self.arms[s.arm].theta, &self.arms[target].theta);
                let reach = if self.params.alpha == 1.0 { dist } else { dist.powf(self.params.alpha) };
                let width = scale * reach + slack;
                lower = lower.max(value - width);
                upper = upper.min(value + width);
            }
            self.arms[target].lower = lower;
            self.arms[target].upper = upper;
        }
        let min_upper = self.arms.iter().filter(|a| a.active).map(|a| a.upper).fold(f64::INFINITY, f64::min);
        for arm in &mut self.arms {
            if arm.active && arm.lower > min_upper {
                arm.active = false;
            }
        }
    }

    /// Deployed arm with the smallest own risk estimate.
    pub fn best(&self) -> Option<usize> {
        self.sources
            .iter()
            .map(|s| (s.arm, self.estimate(s, s.arm).0))
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
            .map(|(arm, _)| arm)
    }

    pub fn into_output(self) -> Result<RunOutput> {
        let best = self.best().ok_or_else(|| Error::InvalidInput("no arm was deployed".into()))?;
        Ok(RunOutput {
            best: self.arms[best].theta.clone(),
            best_site: Site::Arm(best),
            deployments: self.ledger.into_log(),
        })
    }
}

/// Runs zooming until the cap is hit or no arm remains active.
pub fn run_szooming<E: Environment>(
    env: &mut E,
    budget: Budget,
    grid: Vec<Vec<f64>>,
    params: ZoomingParams,
) -> Result<RunOutput> {
    for p in &grid {
        env.domain().check(p)?;
    }
    let mut zoom = Zooming::new(grid, params, budget)?;
    while zoom.step(env)?.is_some() {}
    zoom.into_output()
}
