//! Theory report for a finished run directory.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

use perfopt::analysis::{bound_data, bound_full, near_opt_dim, Bound, NearOptDim, RegimeParams, TheoryInputs};
use perfopt::doop::doop_hmax;
use perfopt::environment::{default_grid_resolution, Domain};
use perfopt::soop::soop_budgets;

use crate::config::Algorithm;
use crate::error::HarnessError;
use crate::persist::{read_json, write_json};
use crate::runner::{mean_std, summary_path, Metadata, RunSummary, METADATA_FILE};

pub const REPORT_FILE: &str = "analysis.json";

/// Depths and grid used for the near-optimality estimate.
pub const DIM_DEPTHS: std::ops::RangeInclusive<u32> = 1..=6;
pub const DIM_RESOLUTION: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sensitivity {
    /// Forward-difference gradient bound of the noise mean, original units.
    pub epsilon: f64,
    /// The same bound per unit of the normalized decision cube.
    pub epsilon_unit: f64,
    pub method: String,
    pub resolution: usize,
    pub lz: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Overlay {
    pub horizon: usize,
    pub doop_h_max: Option<usize>,
    pub full: Option<Bound>,
    pub soop_h_max: Option<usize>,
    pub data: Option<Bound>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub runs: usize,
    pub simple_regret_mean: f64,
    pub cumulative_regret_mean: f64,
    pub deployments: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub experiment: String,
    pub sensitivity: Sensitivity,
    pub nu: f64,
    pub rho: f64,
    pub near_optimality: NearOptDim,
    pub c_star: f64,
    pub delta: f64,
    /// Sampled-feedback regime at the experiment's horizon, when defined.
    pub regime: Option<RegimeParams>,
    pub overlays: Vec<Overlay>,
    /// Every seed's runs used the same number of deployments.
    pub equal_budget: bool,
    pub runs: BTreeMap<String, RunStats>,
}

pub fn analyze(dir: &Path) -> Result<AnalysisReport, HarnessError> {
    let meta_path = dir.join(METADATA_FILE);
    if !meta_path.is_file() {
        return Err(HarnessError::Missing(format!("no {METADATA_FILE} in {}", dir.display())));
    }
    let meta: Metadata = read_json(&meta_path)?;
    let mut summaries: Vec<RunSummary> = Vec::new();
    for &algorithm in &meta.algorithms {
        for &seed in &meta.seeds {
            summaries.push(read_json(&summary_path(dir, algorithm, seed))?);
        }
    }
    if summaries.is_empty() {
        return Err(HarnessError::Missing(format!("no run summaries in {}", dir.display())));
    }

    let config = &meta.config;
    let env = meta.environment.build(0);
    let resolution = default_grid_resolution(env.dim());
    let epsilon = env.rate_sensitivity(resolution);
    let alpha = config.zooming.alpha;
    // The theory uses the loss's Lipschitz constant in z, which is 1 for the
    // additive environments whatever the zooming baseline was given.
    let lz = 1.0;
    let sensitivity = Sensitivity {
        epsilon,
        epsilon_unit: epsilon * env.domain().max_width(),
        method: "grid_forward_difference".into(),
        resolution,
        lz,
        alpha,
    };
    let dim = env.dim();
    let inputs_at = |horizon: usize, d: f64| TheoryInputs {
        m0: config.m0,
        ..TheoryInputs::new(d, alpha, dim, lz, sensitivity.epsilon_unit, horizon)
    };
    let probe = inputs_at(meta.horizon, 0.0);
    let (nu, rho) = (probe.nu(), probe.rho());
    let near_optimality = near_opt_dim(&env, nu.max(f64::MIN_POSITIVE), rho, DIM_DEPTHS, DIM_RESOLUTION)?;
    let d = near_optimality.d;
    let regime = RegimeParams::new(&inputs_at(meta.horizon, d)).ok();

    let mut horizons = vec![meta.horizon, 1000, 10_000, 100_000];
    horizons.sort_unstable();
    horizons.dedup();
    let overlays = horizons
        .into_iter()
        .map(|horizon| {
            let inputs = inputs_at(horizon, d);
            Overlay {
                horizon,
                doop_h_max: doop_hmax(horizon, dim).ok(),
                full: bound_full(&inputs).ok(),
                soop_h_max: soop_budgets(horizon, dim).ok().map(|b| b.0),
                data: bound_data(&inputs).ok().map(|b| b.0),
            }
        })
        .collect();

    let equal_budget = meta.seeds.iter().all(|&seed| {
        let mut counts = summaries.iter().filter(|s| s.seed == seed).map(|s| s.deployments);
        let first = counts.next();
        counts.all(|c| Some(c) == first)
    });
    let runs = meta
        .algorithms
        .iter()
        .map(|&a: &Algorithm| {
            let mine: Vec<&RunSummary> = summaries.iter().filter(|s| s.algorithm == a).collect();
            let values = |f: fn(&RunSummary) -> f64| mine.iter().map(|s| f(s)).collect::<Vec<_>>();
            let stats = RunStats {
                runs: mine.len(),
                simple_regret_mean: mean_std(&values(|s| s.simple_regret)).0,
                cumulative_regret_mean: mean_std(&values(|s| s.cumulative_regret)).0,
                deployments: mine.iter().map(|s| s.deployments).collect(),
            };
            (a.name().to_string(), stats)
        })
        .collect();

    let base = TheoryInputs::new(0.0, alpha, dim, lz, 0.0, 2);
    Ok(AnalysisReport {
        experiment: meta.experiment.clone(),
        sensitivity,
        nu,
        rho,
        near_optimality,
        c_star: base.c_star,
        delta: base.delta,
        regime,
        overlays,
        equal_budget,
        runs,
    })
}

/// Runs [`analyze`] and writes the report into the directory.
pub fn analyze_and_write(dir: &Path) -> Result<AnalysisReport, HarnessError> {
    let report = analyze(dir)?;
    write_json(&dir.join(REPORT_FILE), &report)?;
    Ok(report)
}
