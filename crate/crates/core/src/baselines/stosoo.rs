//! StoSOO on cell centers with sampled feedback.
//!
//! A leaf is evaluated up to `k` times; at each depth of a sweep the leaf with
//! the smallest lower confidence bound `μ − √(ln(T·k/δ) / 2n)` is evaluated
//! again, or expanded once it has `k` evaluations and beats the sweep's
//! running minimum.

use serde::{Deserialize, Serialize};

use crate::doop::by_value_then_cell;
use crate::environment::{empirical_dpr, Environment, SampleSet};
use crate::partition::{self, Cell, PartitionConfig};
use crate::run::{Budget, Ledger, RunOutput, Site};
use crate::soop::soop_budgets;
use crate::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StoSooParams {
    /// Evaluations per node before it may be expanded. Default `⌈T/(m0·h_max)⌉`.
    pub k: Option<usize>,
    /// Confidence parameter. Default `1/√T`.
    pub delta: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct StoSooNode {
    pub cell: Cell,
    pub theta: Vec<f64>,
    pub sum: f64,
    pub evals: usize,
    pub expanded: bool,
}

impl StoSooNode {
    pub fn mean(&self) -> f64 {
        if self.evals == 0 {
            f64::INFINITY
        } else {
            self.sum / self.evals as f64
        }
    }
}

#[derive(Debug, Clone)]
pub struct StoSooRun {
    pub output: RunOutput,
    pub nodes: Vec<StoSooNode>,
    pub k: usize,
    pub h_max: usize,
}

pub fn run_stosoo<E: Environment>(
    env: &mut E,
    budget: Budget,
    m0: usize,
    config: &PartitionConfig,
    params: &StoSooParams,
) -> Result<StoSooRun> {
    if m0 == 0 {
        return Err(Error::InvalidInput("m0 must be at least 1".into()));
    }
    let dim = env.dim();
    let horizon = budget.horizon;
    let (h_max, _) = soop_budgets(horizon, dim)?;
    let k = params.k.unwrap_or_else(|| horizon.div_ceil(m0 * h_max)).max(1);
    let delta = params.delta.unwrap_or(1.0 / (horizon as f64).sqrt());
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidInput(format!("delta must lie in (0,1), got {delta}")));
    }
    let log_term = (horizon as f64 * k as f64 / delta).ln();
    let depth_limit = config.depth_limit(dim) as usize;

    let mut ledger = Ledger::new(budget.cap);
    let root = partition::root(dim);
    let mut nodes = vec![StoSooNode {
        theta: env.domain().to_original(&root.center()),
        cell: root,
        sum: 0.0,
        evals: 0,
        expanded: false,
    }];

    let lcb = |n: &StoSooNode| {
        if n.evals == 0 {
            f64::NEG_INFINITY
        } else {
            n.mean() - (log_term / (2.0 * n.evals as f64)).sqrt()
        }
    };

    while !ledger.exhausted() {
        let mut v_min = f64::INFINITY;
        let mut acted = false;
        let deepest = nodes.iter().filter(|n| !n.expanded).map(|n| n.cell.depth() as usize).max().unwrap_or(0);
        for h in 0..=deepest.min(h_max).min(depth_limit.saturating_sub(1)) {
            if ledger.exhausted() {
                break;
            }
            let pick = (0..nodes.len()).filter(|&i| !nodes[i].expanded && nodes[i].cell.depth() as usize == h).min_by(
                |&a, &b| by_value_then_cell((lcb(&nodes[a]), &nodes[a].cell), (lcb(&nodes[b]), &nodes[b].cell)),
            );
            let Some(id) = pick else { continue };
            if nodes[id].evals < k {
                let node = &nodes[id];
                let mut batch = SampleSet::new(node.theta.clone());
                env.deploy_sample(&node.theta, m0, &mut batch)?;
                let value = empirical_dpr(env, &batch, &node.theta)?;
                ledger.push(&node.theta, Site::of(&node.cell), m0);
                let node = &mut nodes[id];
                node.sum += value;
                node.evals += 1;
                acted = true;
            } else if nodes[id].mean() <= v_min {
                v_min = nodes[id].mean();
                nodes[id].expanded = true;
                for child in nodes[id].cell.children() {
                    let theta = env.domain().to_original(&child.center());
                    nodes.push(StoSooNode { cell: child, theta, sum: 0.0, evals: 0, expanded: false });
                }
                acted = true;
            }
        }
        if !acted {
            break;
        }
    }

    // The sweeps can no longer act within the depth limit; spend what is left
    // evaluating the leaf with the smallest lower confidence bound.
    while !ledger.exhausted() {
        let Some(id) = (0..nodes.len())
            .filter(|&i| !nodes[i].expanded)
            .min_by(|&a, &b| by_value_then_cell((lcb(&nodes[a]), &nodes[a].cell), (lcb(&nodes[b]), &nodes[b].cell)))
        else {
            break;
        };
        let node = &nodes[id];
        let mut batch = SampleSet::new(node.theta.clone());
        env.deploy_sample(&node.theta, m0, &mut batch)?;
        let value = empirical_dpr(env, &batch, &node.theta)?;
        ledger.push(&node.theta, Site::of(&node.cell), m0);
        nodes[id].sum += value;
        nodes[id].evals += 1;
    }

    let most = nodes.iter().map(|n| n.evals.min(k)).max().unwrap_or(0);
    let best = (0..nodes.len())
        .filter(|&i| nodes[i].evals > 0 && nodes[i].evals.min(k) == most)
        .min_by(|&a, &b| by_value_then_cell((nodes[a].mean(), &nodes[a].cell), (nodes[b].mean(), &nodes[b].cell)))
        .ok_or_else(|| Error::InvalidInput("deployment cap is zero".into()))?;
    let output = RunOutput {
        best: nodes[best].theta.clone(),
        best_site: Site::of(&nodes[best].cell),
        deployments: ledger.into_log(),
    };
    Ok(StoSooRun { output, nodes, k, h_max })
}
