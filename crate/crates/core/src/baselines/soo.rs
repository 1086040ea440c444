//! Simultaneous optimistic optimization on cell centers, full feedback.

use crate::doop::{by_value_then_cell, doop_hmax};
use crate::environment::{DistributionHandle, Environment};
use crate::partition::{self, Cell, PartitionConfig};
use crate::run::{Budget, Ledger, RunOutput, Site};
use crate::Result;

#[derive(Debug, Clone)]
pub struct SooNode {
    pub cell: Cell,
    pub theta: Vec<f64>,
    pub value: f64,
    pub expanded: bool,
}

#[derive(Debug, Clone)]
pub struct SooRun {
    pub output: RunOutput,
    pub nodes: Vec<SooNode>,
    /// Node ids expanded in each sweep, in expansion order.
    pub sweeps: Vec<Vec<usize>>,
    pub h_max: usize,
}

pub fn run_soo<E: Environment>(env: &mut E, budget: Budget, config: &PartitionConfig) -> Result<SooRun> {
    let dim = env.dim();
    let h_max = doop_hmax(budget.horizon, dim)?;
    let depth_limit = config.depth_limit(dim) as usize;
    let mut ledger = Ledger::new(budget.cap);
    let mut nodes: Vec<SooNode> = Vec::new();

    let evaluate = |cell: Cell, env: &mut E, ledger: &mut Ledger, nodes: &mut Vec<SooNode>| -> Result<()> {
        let theta = env.domain().to_original(&cell.center());
        let value = env.deploy_full(&theta)?.dpr(&theta)?;
        ledger.push(&theta, Site::of(&cell), 0);
        nodes.push(SooNode { cell, theta, value, expanded: false });
        Ok(())
    };

    if ledger.exhausted() {
        return Err(crate::Error::InvalidInput("deployment cap is zero".into()));
    }
    evaluate(partition::root(dim), env, &mut ledger, &mut nodes)?;

    let mut sweeps = Vec::new();
    'search: while !ledger.exhausted() {
        let mut v_min = f64::INFINITY;
        let mut expanded = Vec::new();
        let deepest = nodes.iter().filter(|n| !n.expanded).map(|n| n.cell.depth() as usize).max().unwrap_or(0);
        for h in 0..=deepest.min(h_max).min(depth_limit.saturating_sub(1)) {
            let pick = (0..nodes.len()).filter(|&i| !nodes[i].expanded && nodes[i].cell.depth() as usize == h).min_by(
                |&a, &b| by_value_then_cell((nodes[a].value, &nodes[a].cell), (nodes[b].value, &nodes[b].cell)),
            );
            let Some(id) = pick else { continue };
            if nodes[id].value <= v_min {
                v_min = nodes[id].value;
                nodes[id].expanded = true;
                expanded.push(id);
                for child in nodes[id].cell.children() {
                    if ledger.exhausted() {
                        sweeps.push(expanded);
                        break 'search;
                    }
                    evaluate(child, env, &mut ledger, &mut nodes)?;
                }
            }
        }
        if expanded.is_empty() {
            break;
        }
        sweeps.push(expanded);
    }

    // The tree is exhausted within the depth limit; redeploy the best point.
    if !ledger.exhausted() {
        let best = (0..nodes.len())
            .min_by(|&a, &b| by_value_then_cell((nodes[a].value, &nodes[a].cell), (nodes[b].value, &nodes[b].cell)))
            .expect("root evaluated");
        let (theta, site) = (nodes[best].theta.clone(), Site::of(&nodes[best].cell));
        while !ledger.exhausted() {
            env.deploy_full(&theta)?;
            ledger.push(&theta, site.clone(), 0);
        }
    }

    let best = (0..nodes.len())
        .min_by(|&a, &b| by_value_then_cell((nodes[a].value, &nodes[a].cell), (nodes[b].value, &nodes[b].cell)))
        .expect("root evaluated");
    let output = RunOutput {
        best: nodes[best].theta.clone(),
        best_site: Site::of(&nodes[best].cell),
        deployments: ledger.into_log(),
    };
    Ok(SooRun { output, nodes, sweeps, h_max })
}
