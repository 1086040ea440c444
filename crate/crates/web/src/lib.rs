//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Each exported function has a plain-Rust twin returning `Result<_, String>`
//! so the logic can be tested natively.

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use perfopt::analysis::{bound_data, bound_full, near_opt_dim, TheoryInputs};
use perfopt::baselines::{run_blackbox, run_szooming, BlackBox, FeedbackMode, ZoomingParams};
use perfopt::doop::run_doop;
use perfopt::environment::{pairwise_lipschitz, Domain, EnvKind, GroundTruth};
use perfopt::metrics::RunTrace;
use perfopt::partition::PartitionConfig;
use perfopt::run::{Budget, RunOutput};
use perfopt::soop::run_soop;

const ZOOMING_GRID: usize = 55;
const SENSITIVITY_GRID: usize = 257;

fn env_kind(name: &str) -> Result<EnvKind, String> {
    name.parse().map_err(|e: perfopt::Error| e.to_string())
}

/// Row-major PR values on a `resolution × resolution` grid, `theta_0` slowest.
pub fn landscape_values(env: &str, resolution: usize) -> Result<Vec<f64>, String> {
    if !(2..=512).contains(&resolution) {
        return Err("resolution must be between 2 and 512".into());
    }
    let env = env_kind(env)?.build(0);
    Ok(env.domain().grid(resolution).iter().map(|p| env.true_pr(p)).collect())
}

fn run_output(kind: EnvKind, algorithm: &str, horizon: usize, seed: u64, m0: usize) -> Result<RunOutput, String> {
    let mut env = kind.build(seed);
    let config = PartitionConfig::default();
    let budget = Budget::new(horizon);
    let out = match algorithm {
        "doop" => run_doop(&mut env, budget, &config).map(|r| r.output),
        "soop" => run_soop(&mut env, budget, m0, &config).map(|r| r.output),
        "szooming" | "szooming_sampled" => {
            let grid = env.domain().grid(ZOOMING_GRID);
            let epsilon = pairwise_lipschitz(|t| env.rate(t), &grid);
            let mode = if algorithm == "szooming" { FeedbackMode::Full } else { FeedbackMode::Sampled };
            let params = ZoomingParams { lz: epsilon, epsilon, alpha: 1.0, mode, m0 };
            run_szooming(&mut env, budget, grid, params)
        }
        other => {
            let name: BlackBox = other.parse().map_err(|e: perfopt::Error| e.to_string())?;
            run_blackbox(name, &mut env, budget, &config, m0, &Default::default())
        }
    };
    out.map_err(|e| e.to_string())
}

/// One run as JSON: deployed points, cumulative regret per deployment and
/// the returned decision.
pub fn run_json(env: &str, algorithm: &str, horizon: usize, seed: u64, m0: usize) -> Result<String, String> {
    let kind = env_kind(env)?;
    let output = run_output(kind, algorithm, horizon, seed, m0.max(1))?;
    let oracle = kind.build(seed);
    let trace = RunTrace::from_output(&output, &oracle, oracle.optimum(), 0.0);
    let points: Vec<&[f64]> = trace.records.iter().map(|r| r.theta.as_slice()).collect();
    let value = json!({
        "algorithm": algorithm,
        "deployments": trace.len(),
        "points": points,
        "cum_regret": trace.curve(),
        "best": output.best,
        "simple_regret": trace.simple_regret,
        "optimum": trace.optimum.theta,
    });
    Ok(value.to_string())
}

/// Full-feedback and sampled-feedback regret bounds at each horizon, with
/// the near-optimality dimension estimated on the landscape.
pub fn bounds_json(env: &str, horizons: &[u32]) -> Result<String, String> {
    let env = env_kind(env)?.build(0);
    let epsilon = env.rate_sensitivity(SENSITIVITY_GRID) * env.domain().max_width();
    let dim = env.dim();
    let probe = TheoryInputs::new(0.0, 1.0, dim, 1.0, epsilon, 2);
    let d =
        near_opt_dim(&env, probe.nu().max(f64::MIN_POSITIVE), probe.rho(), 1..=6, 256).map_err(|e| e.to_string())?.d;
    let rows: Vec<Value> = horizons
        .iter()
        .map(|&t| {
            let inputs = TheoryInputs::new(d, 1.0, dim, 1.0, epsilon, t as usize);
            json!({
                "horizon": t,
                "full": bound_full(&inputs).ok().map(|b| b.value),
                "sampled": bound_data(&inputs).ok().map(|(b, _)| b.value),
            })
        })
        .collect();
    Ok(json!({ "d": d, "epsilon_unit": epsilon, "rows": rows }).to_string())
}

#[wasm_bindgen]
pub fn landscape(env: &str, resolution: usize) -> Result<Vec<f64>, JsError> {
    landscape_values(env, resolution).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn run(env: &str, algorithm: &str, horizon: usize, seed: u64, m0: usize) -> Result<String, JsError> {
    run_json(env, algorithm, horizon, seed, m0).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn bounds(env: &str, horizons: Vec<u32>) -> Result<String, JsError> {
    bounds_json(env, &horizons).map_err(|e| JsError::new(&e))
}
