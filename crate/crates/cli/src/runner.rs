//! Seed sweeps with equal-budget comparison.
//!
//! For every seed the primary algorithm (DOOP or SOOP) runs first with the
//! full horizon; every other algorithm is then capped at the number of
//! deployments the primary actually used. All algorithms of one seed share
//! the environment seed. Regret is attached after the timed call returns.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::time::Instant;

use perfopt::baselines::{run_blackbox, run_szooming, FeedbackMode, ZoomingParams};
use perfopt::doop::run_doop;
use perfopt::environment::{pairwise_lipschitz, Domain, EnvKind, GroundTruth, Optimum};
use perfopt::metrics::RunTrace;
use perfopt::run::{Budget, RunOutput};
use perfopt::soop::run_soop;

use crate::config::{Algorithm, ExperimentConfig, LzSetting};
use crate::error::HarnessError;
use crate::persist::{write_atomic, write_json};

/// Environment variable holding the worker count for parallel runs.
pub const WORKERS_ENV: &str = "PERFOPT_WORKERS";

pub fn workers_from_env() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Per-experiment quantities computed once and shared by all runs.
#[derive(Debug, Clone)]
pub struct Context {
    pub grid: Vec<Vec<f64>>,
    pub zooming: ZoomingParams,
    pub epsilon_source: &'static str,
    pub optimum: Optimum,
}

impl Context {
    pub fn new(config: &ExperimentConfig) -> Self {
        let env = config.environment.build(0);
        let grid = env.domain().grid(config.zooming.grid_per_axis);
        let z = &config.zooming;
        let (epsilon, epsilon_source) = match z.epsilon {
            Some(e) => (e, "config"),
            None => (pairwise_lipschitz(|t| env.rate(t), &grid), "pairwise_grid_lipschitz"),
        };
        let lz = match z.lz {
            LzSetting::Value(v) => v,
            LzSetting::Keyword(_) => pairwise_lipschitz(|t| env.rate(t), &grid),
        };
        let zooming = ZoomingParams { lz, epsilon, alpha: config.zooming.alpha, mode: config.mode, m0: config.m0 };
        Self { grid, zooming, epsilon_source, optimum: env.optimum() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub experiment: String,
    pub algorithm: Algorithm,
    pub seed: u64,
    pub environment: EnvKind,
    pub mode: FeedbackMode,
    pub horizon: usize,
    /// Deployment cap the run was held to.
    pub cap: usize,
    pub deployments: usize,
    pub simple_regret: f64,
    pub cumulative_regret: f64,
    pub wall_clock_secs: f64,
    pub final_theta: Vec<f64>,
    pub config: ExperimentConfig,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub summary: RunSummary,
    pub trace: RunTrace,
}

/// Runs one algorithm on a fresh environment; returns its output and the
/// wall-clock seconds of the algorithm call alone.
pub fn run_algorithm(
    config: &ExperimentConfig,
    ctx: &Context,
    algorithm: Algorithm,
    seed: u64,
    budget: Budget,
) -> Result<(RunOutput, f64), HarnessError> {
    let mut env = config.environment.build(seed);
    let grid = (algorithm == Algorithm::SZooming).then(|| ctx.grid.clone());
    let start = Instant::now();
    let output = match algorithm {
        Algorithm::Doop => run_doop(&mut env, budget, &config.partition)?.output,
        Algorithm::Soop => run_soop(&mut env, budget, config.m0, &config.partition)?.output,
        Algorithm::SZooming => run_szooming(&mut env, budget, grid.expect("grid cloned"), ctx.zooming.clone())?,
        other => {
            let name = other.black_box().expect("remaining algorithms are black-box");
            run_blackbox(name, &mut env, budget, &config.partition, config.m0, &config.stosoo)?
        }
    };
    Ok((output, start.elapsed().as_secs_f64()))
}

/// All algorithms of one seed, in config order.
pub fn run_seed(config: &ExperimentConfig, ctx: &Context, seed: u64) -> Result<Vec<RunResult>, HarnessError> {
    let oracle = config.environment.build(seed);
    let mut cap = config.horizon;
    let mut order: Vec<Algorithm> = config.algorithms.clone();
    if let Some(primary) = config.primary() {
        order.retain(|&a| a != primary);
        order.insert(0, primary);
    }
    let mut results = Vec::with_capacity(order.len());
    for (i, &algorithm) in order.iter().enumerate() {
        let budget = Budget::capped(config.horizon, cap);
        let (output, secs) = run_algorithm(config, ctx, algorithm, seed, budget)?;
        if i == 0 && algorithm.is_primary() {
            cap = output.deployments.len();
        }
        let trace = RunTrace::from_output(&output, &oracle, ctx.optimum.clone(), secs);
        let summary = RunSummary {
            experiment: config.name.clone(),
            algorithm,
            seed,
            environment: config.environment,
            mode: config.mode,
            horizon: config.horizon,
            cap: budget.cap,
            deployments: trace.len(),
            simple_regret: trace.simple_regret.expect("finished trace"),
            cumulative_regret: trace.cumulative_regret(),
            wall_clock_secs: secs,
            final_theta: output.best.clone(),
            config: config.clone(),
        };
        results.push(RunResult { summary, trace });
    }
    results.sort_by_key(|r| config.algorithms.iter().position(|&a| a == r.summary.algorithm));
    Ok(results)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveStats {
    pub algorithm: Algorithm,
    pub seeds: usize,
    /// Number of shared step indices; every seed has at least this many.
    pub steps: usize,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub cumulative_regret_mean: f64,
    pub cumulative_regret_std: f64,
    pub simple_regret_mean: f64,
    pub simple_regret_std: f64,
    pub wall_clock_mean: f64,
    pub deployments: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub experiment: String,
    /// Unit of the curves' x axis.
    pub x_axis: String,
    pub algorithms: Vec<CurveStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub experiment: String,
    pub environment: EnvKind,
    pub mode: FeedbackMode,
    pub horizon: usize,
    pub seeds: Vec<u64>,
    pub algorithms: Vec<Algorithm>,
    pub primary: Option<Algorithm>,
    pub optimum: Optimum,
    pub zooming_lz: f64,
    pub zooming_epsilon: f64,
    pub zooming_epsilon_source: String,
    pub zooming_grid_points: usize,
    pub x_axis: String,
    pub config: ExperimentConfig,
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub metadata: Metadata,
    /// Seed-major, config order within a seed.
    pub runs: Vec<RunResult>,
    pub aggregate: Aggregate,
}

impl Experiment {
    pub fn runs_of(&self, algorithm: Algorithm) -> impl Iterator<Item = &RunResult> {
        self.runs.iter().filter(move |r| r.summary.algorithm == algorithm)
    }

    pub fn stats(&self, algorithm: Algorithm) -> Option<&CurveStats> {
        self.aggregate.algorithms.iter().find(|s| s.algorithm == algorithm)
    }
}

/// Sample mean and standard deviation; the deviation is 0 for one value.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn aggregate(config: &ExperimentConfig, runs: &[RunResult]) -> Aggregate {
    let algorithms = config
        .algorithms
        .iter()
        .map(|&algorithm| {
            let mine: Vec<&RunResult> = runs.iter().filter(|r| r.summary.algorithm == algorithm).collect();
            let steps = mine.iter().map(|r| r.trace.len()).min().unwrap_or(0);
            let (mut mean, mut std) = (Vec::with_capacity(steps), Vec::with_capacity(steps));
            for t in 0..steps {
                let at: Vec<f64> = mine.iter().map(|r| r.trace.records[t].cum_regret).collect();
                let (m, s) = mean_std(&at);
                mean.push(m);
                std.push(s);
            }
            let pick = |f: fn(&RunSummary) -> f64| mean_std(&mine.iter().map(|r| f(&r.summary)).collect::<Vec<_>>());
            let (cumulative_regret_mean, cumulative_regret_std) = pick(|s| s.cumulative_regret);
            let (simple_regret_mean, simple_regret_std) = pick(|s| s.simple_regret);
            CurveStats {
                algorithm,
                seeds: mine.len(),
                steps,
                mean,
                std,
                cumulative_regret_mean,
                cumulative_regret_std,
                simple_regret_mean,
                simple_regret_std,
                wall_clock_mean: pick(|s| s.wall_clock_secs).0,
                deployments: mine.iter().map(|r| r.summary.deployments).collect(),
            }
        })
        .collect();
    Aggregate { experiment: config.name.clone(), x_axis: "deployments".into(), algorithms }
}

/// Runs every (algorithm, seed) pair, seeds in parallel on `workers` threads.
pub fn run_experiment(config: &ExperimentConfig, workers: usize) -> Result<Experiment, HarnessError> {
    config.validate()?;
    let ctx = Context::new(config);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| HarnessError::Config(format!("cannot start {workers} workers: {e}")))?;
    let per_seed: Vec<Vec<RunResult>> =
        pool.install(|| config.seeds.par_iter().map(|&seed| run_seed(config, &ctx, seed)).collect::<Result<_, _>>())?;
    let runs: Vec<RunResult> = per_seed.into_iter().flatten().collect();
    let metadata = Metadata {
        experiment: config.name.clone(),
        environment: config.environment,
        mode: config.mode,
        horizon: config.horizon,
        seeds: config.seeds.clone(),
        algorithms: config.algorithms.clone(),
        primary: config.primary(),
        optimum: ctx.optimum.clone(),
        zooming_lz: ctx.zooming.lz,
        zooming_epsilon: ctx.zooming.epsilon,
        zooming_epsilon_source: ctx.epsilon_source.into(),
        zooming_grid_points: ctx.grid.len(),
        x_axis: "deployments".into(),
        config: config.clone(),
    };
    let aggregate = aggregate(config, &runs);
    Ok(Experiment { metadata, runs, aggregate })
}

pub const METADATA_FILE: &str = "experiment.json";
pub const AGGREGATE_FILE: &str = "aggregate.json";

pub fn trace_path(dir: &Path, algorithm: Algorithm, seed: u64) -> std::path::PathBuf {
    dir.join(algorithm.name()).join(format!("seed_{seed}.csv"))
}

pub fn summary_path(dir: &Path, algorithm: Algorithm, seed: u64) -> std::path::PathBuf {
    dir.join(algorithm.name()).join(format!("seed_{seed}.json"))
}

/// Writes per-run CSV and summary JSON, the aggregate curves and the
/// experiment metadata under `dir`.
pub fn write_experiment(experiment: &Experiment, dir: &Path) -> Result<(), HarnessError> {
    for run in &experiment.runs {
        let s = &run.summary;
        let mut csv = Vec::new();
        run.trace.write_csv(&mut csv)?;
        write_atomic(&trace_path(dir, s.algorithm, s.seed), &csv)?;
        write_json(&summary_path(dir, s.algorithm, s.seed), s)?;
    }
    write_json(&dir.join(AGGREGATE_FILE), &experiment.aggregate)?;
    write_json(&dir.join(METADATA_FILE), &experiment.metadata)
}
