//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::Instant;

use perfopt::analysis::lambert_w;
use perfopt::baselines::{FeedbackMode, Zooming, ZoomingParams};
use perfopt::doop::{doop_hmax, run_doop};
use perfopt::environment::{
    empirical_dpr, euclidean, pairwise_lipschitz, DistributionHandle, Domain, EnvKind, Environment, GroundTruth,
    SampleSet,
};
use perfopt::partition::PartitionConfig;
use perfopt::run::Budget;
use perfopt::soop::{run_soop, soop_budgets};
use perfopt::Error;
use perfopt_harness::runner::{run_experiment, workers_from_env, write_experiment, Experiment};
use perfopt_harness::{Algorithm, ExperimentConfig, LzSetting};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SENSITIVITY_GRID: usize = 1025;

type Check = fn() -> Outcome;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }
}

fn budget_exactness() -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;
    for t in [128usize, 1000, 10_000] {
        let mut env = EnvKind::AckleyExpRastrigin.build(0);
        match run_soop(&mut env, Budget::new(t), 10, &PartitionConfig::default()) {
            Ok(run) => {
                let c = &run.state.counters;
                let ok = 4 * (c.init + c.exploration) <= 3 * t
                    && 4 * c.validation <= t
                    && c.total() <= t
                    && c.total() == run.output.deployments.len();
                pass &= ok;
                notes.push(format!(
                    "T={t}: init+explore={} validate={} total={}",
                    c.init + c.exploration,
                    c.validation,
                    c.total()
                ));
            }
            Err(Error::BudgetTooSmall { .. }) => {
                pass &= env.draws() == 0;
                notes.push(format!("T={t}: refused with h_max=0, {} draws", env.draws()));
            }
            Err(e) => {
                pass = false;
                notes.push(format!("T={t}: {e}"));
            }
        }
    }
    Outcome::new(pass, notes.join("; "))
}

fn hmax_arithmetic() -> Outcome {
    let mut h = 0.0;
    for k in 1..=1000 {
        h += 1.0 / k as f64;
    }
    let direct_doop = (1000.0 / (4.0 * h)).floor() as usize;
    let l = (10_000f64).ln() / 2f64.ln() + 1.0;
    let direct_h = (10_000.0 / (8.0 * l * l)).floor() as usize;
    let mut direct_p = 0;
    while 1usize << (direct_p + 1) <= direct_h {
        direct_p += 1;
    }
    let doop = doop_hmax(1000, 2).ok();
    let soop = soop_budgets(10_000, 2).ok();
    let pass = doop == Some(33) && direct_doop == 33 && soop == Some((6, 2)) && (direct_h, direct_p) == (6, 2);
    Outcome::new(
        pass,
        format!("doop_hmax={doop:?} (direct {direct_doop}), soop_budgets={soop:?} (direct ({direct_h}, {direct_p}))"),
    )
}

fn random_point(rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..2).map(|_| rng.random_range(-5.12..=5.12)).collect()
}

fn sensitivity_interval() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut violations = 0;
    let mut notes = Vec::new();
    for kind in EnvKind::ALL {
        let mut env = kind.build(0);
        let eps = env.rate_sensitivity(SENSITIVITY_GRID);
        let mut worst = 0.0f64;
        for _ in 0..1000 {
            let (a, b) = (random_point(&mut rng), random_point(&mut rng));
            let dpr = env.deploy_full(&a).and_then(|h| h.dpr(&b)).expect("in-domain points");
            let gap = (env.true_pr(&b) - dpr).abs();
            let allowed = eps * euclidean(&a, &b);
            if gap > allowed {
                violations += 1;
            }
            if allowed > 0.0 {
                worst = worst.max(gap / allowed);
            }
        }
        notes.push(format!("{kind}: eps={eps:.4}, max gap/allowed={worst:.3}"));
    }
    Outcome::new(violations == 0, format!("{violations} violations of 2000; {}", notes.join("; ")))
}

fn representative_quality() -> Outcome {
    let config = PartitionConfig::default();
    let (mut checked, mut violations) = (0, 0);
    for kind in EnvKind::ALL {
        let mut env = kind.build(0);
        let eps = env.rate_sensitivity(SENSITIVITY_GRID) * env.domain().max_width();
        let run = run_doop(&mut env, Budget::new(2000), &config).expect("T=2000 is feasible");
        for rec in run.state.records.iter().filter(|r| r.cell.depth() > 0) {
            let best = rec
                .cell
                .candidate_points(config.candidates, config.salt)
                .iter()
                .map(|u| env.true_pr(&env.domain().to_original(u)))
                .fold(f64::INFINITY, f64::min);
            let slack = 2.0 * 2.0 * 2f64.sqrt() * eps * (-(rec.cell.depth() as f64)).exp2();
            checked += 1;
            if env.true_pr(&rec.theta) > best + slack + 1e-12 {
                violations += 1;
            }
        }
    }
    Outcome::new(violations == 0, format!("{violations} violations over {checked} evaluated cells"))
}

fn concentration_rate() -> Outcome {
    let mut env = EnvKind::AckleyExpRastrigin.build(9);
    let source = vec![1.0, 1.0];
    let handle = env.deploy_full(&source).expect("in-domain source");
    let targets = env.domain().grid(5);
    let reps = 200;
    let mut points = Vec::new();
    for n in [1usize, 4, 16, 64] {
        let mut total = 0.0;
        for _ in 0..reps {
            let mut set = SampleSet::new(source.clone());
            env.deploy_sample(&source, n * 10, &mut set).expect("sampling");
            total += targets
                .iter()
                .map(|t| (empirical_dpr(&env, &set, t).unwrap() - handle.dpr(t).unwrap()).abs())
                .fold(0.0, f64::max);
        }
        points.push((((n * 10) as f64).ln(), (total / reps as f64).ln()));
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / points.len() as f64;
    let my = points.iter().map(|p| p.1).sum::<f64>() / points.len() as f64;
    let slope = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / points.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    Outcome::new((-0.65..=-0.35).contains(&slope), format!("log-log slope {slope:.4}"))
}

/// Experiments use the reference zooming protocol: `L_z` and `ε` both equal
/// the largest grid difference quotient of the noise mean.
fn experiment(kind: EnvKind, mode: FeedbackMode, horizon: usize, algorithms: Vec<Algorithm>) -> ExperimentConfig {
    let name = format!("acceptance_{}_{horizon}", kind.name());
    let mut config = ExperimentConfig::new(&name, kind, mode, horizon, algorithms);
    config.zooming.lz = LzSetting::GRID;
    config
}

/// The T=500 full-feedback sweeps shared by the regret and runtime criteria.
fn full_feedback_sweeps() -> &'static Vec<Experiment> {
    static SWEEPS: OnceLock<Vec<Experiment>> = OnceLock::new();
    SWEEPS.get_or_init(|| {
        EnvKind::ALL
            .into_iter()
            .map(|kind| {
                let algorithms = vec![Algorithm::Doop, Algorithm::SequOol, Algorithm::SZooming];
                let config = experiment(kind, FeedbackMode::Full, 500, algorithms);
                run_experiment(&config, workers_from_env()).expect("full-feedback sweep")
            })
            .collect()
    })
}

/// `(mean difference, Cohen's d)` of cumulative regret, `other − primary`.
fn effect(exp: &Experiment, primary: Algorithm, other: Algorithm) -> (f64, f64) {
    let a = exp.stats(primary).expect("primary stats");
    let b = exp.stats(other).expect("baseline stats");
    let diff = b.cumulative_regret_mean - a.cumulative_regret_mean;
    let pooled = ((a.cumulative_regret_std.powi(2) + b.cumulative_regret_std.powi(2)) / 2.0).sqrt();
    let scale = a.cumulative_regret_mean.abs().max(b.cumulative_regret_mean.abs()).max(1.0);
    (diff, if pooled > 1e-9 * scale { diff / pooled } else { f64::INFINITY })
}

fn ordering_notes(exp: &Experiment, primary: Algorithm, others: &[Algorithm]) -> (bool, String) {
    let mut pass = true;
    let mut parts = vec![format!(
        "{} {}={:.1}",
        exp.metadata.environment,
        primary,
        exp.stats(primary).unwrap().cumulative_regret_mean
    )];
    for &other in others {
        let (diff, d) = effect(exp, primary, other);
        pass &= diff > 0.0;
        let d = if d.is_finite() { format!("d={d:.2}") } else { "no seed spread".into() };
        parts.push(format!("{other}={:.1} ({diff:+.1}, {d})", exp.stats(other).unwrap().cumulative_regret_mean));
    }
    (pass, parts.join(" "))
}

fn regret_ordering() -> Outcome {
    let mut pass = true;
    let mut notes = Vec::new();
    for exp in full_feedback_sweeps() {
        let (ok, note) = ordering_notes(exp, Algorithm::Doop, &[Algorithm::SZooming, Algorithm::SequOol]);
        pass &= ok;
        notes.push(note);
    }
    for kind in EnvKind::ALL {
        let algorithms = vec![Algorithm::Soop, Algorithm::StroquOol, Algorithm::SZooming];
        let config = experiment(kind, FeedbackMode::Sampled, 500, algorithms);
        match run_experiment(&config, workers_from_env()) {
            Ok(exp) => {
                let (ok, note) = ordering_notes(&exp, Algorithm::Soop, &[Algorithm::SZooming, Algorithm::StroquOol]);
                pass &= ok;
                notes.push(note);
            }
            Err(e) => {
                pass = false;
                notes.push(format!("{kind} sampled: {e}"));
            }
        }
    }
    Outcome::new(pass, notes.join("; "))
}

fn runtime_ordering() -> Outcome {
    let mut pass = true;
    let mut notes = Vec::new();
    for exp in full_feedback_sweeps() {
        let doop = exp.stats(Algorithm::Doop).unwrap().wall_clock_mean;
        let zoom = exp.stats(Algorithm::SZooming).unwrap().wall_clock_mean;
        pass &= doop <= zoom / 50.0;
        notes.push(format!(
            "{}: doop {doop:.2e}s, szooming {zoom:.2e}s, ratio {:.0}",
            exp.metadata.environment,
            zoom / doop
        ));
    }
    Outcome::new(pass, notes.join("; "))
}

fn lambert_w_accuracy() -> Outcome {
    let mut xs = vec![0.0];
    xs.extend((0..99).map(|i| 10f64.powf(-6.0 + 12.0 * i as f64 / 98.0)));
    let (mut residual_fail, mut lower_fail, mut worst) = (0, 0, 0.0f64);
    for &x in &xs {
        let w = lambert_w(x).expect("nonnegative input");
        let rel = (w * w.exp() - x).abs() / x.max(1.0);
        worst = worst.max(rel);
        if rel > 1e-12 {
            residual_fail += 1;
        }
        if x >= std::f64::consts::E && w < (x / x.ln()).ln() {
            lower_fail += 1;
        }
    }
    Outcome::new(
        residual_fail == 0 && lower_fail == 0,
        format!("{} points, worst scaled residual {worst:.2e}, {lower_fail} lower-bound violations", xs.len()),
    )
}

fn csv_files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    for entry in std::fs::read_dir(dir).expect("run directory") {
        let path = entry.expect("entry").path();
        if path.is_dir() {
            let prefix = path.file_name().unwrap().to_string_lossy().into_owned();
            for (name, bytes) in csv_files(&path) {
                files.insert(format!("{prefix}/{name}"), bytes);
            }
        } else if path.extension().is_some_and(|e| e == "csv") {
            files.insert(path.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&path).unwrap());
        }
    }
    files
}

fn determinism() -> Outcome {
    let full = vec![Algorithm::Doop, Algorithm::Soo, Algorithm::SequOol, Algorithm::SZooming];
    let sampled = vec![Algorithm::Soop, Algorithm::StoSoo, Algorithm::StroquOol, Algorithm::SZooming];
    let mut compared = 0;
    let mut mismatched = Vec::new();
    for kind in EnvKind::ALL {
        for (mode, horizon, algorithms) in
            [(FeedbackMode::Full, 500, full.clone()), (FeedbackMode::Sampled, 2000, sampled.clone())]
        {
            let mut config = experiment(kind, mode, horizon, algorithms);
            config.seeds = vec![0, 7];
            let outputs: Vec<BTreeMap<String, Vec<u8>>> = (0..2)
                .map(|_| {
                    let dir = tempfile::tempdir().expect("temp dir");
                    let exp = run_experiment(&config, workers_from_env()).expect("sweep");
                    write_experiment(&exp, dir.path()).expect("write");
                    csv_files(dir.path())
                })
                .collect();
            compared += outputs[0].len();
            if outputs[0] != outputs[1] || outputs[0].len() != 2 * config.algorithms.len() {
                mismatched.push(format!("{kind} {mode:?}"));
            }
        }
    }
    Outcome::new(
        mismatched.is_empty(),
        format!("{compared} CSV files compared across 7 algorithms; mismatches: {mismatched:?}"),
    )
}

fn zooming_soundness() -> Outcome {
    let (mut runs, mut dropped) = (0, Vec::new());
    for kind in EnvKind::ALL {
        for horizon in [100usize, 200, 300, 400, 500] {
            let mut env = kind.build(horizon as u64);
            let grid = env.domain().grid(55);
            let optimum = env.optimum().theta;
            let nearest = (0..grid.len())
                .min_by(|&a, &b| euclidean(&grid[a], &optimum).total_cmp(&euclidean(&grid[b], &optimum)))
                .expect("nonempty grid");
            let epsilon = pairwise_lipschitz(|t| env.rate(t), &grid);
            let params = ZoomingParams { lz: 1.0, epsilon, alpha: 1.0, mode: FeedbackMode::Full, m0: 10 };
            let mut zoom = Zooming::new(grid, params, Budget::new(horizon)).expect("valid zooming input");
            let mut kept = zoom.arms()[nearest].active;
            while zoom.step(&mut env).expect("step").is_some() {
                kept &= zoom.arms()[nearest].active;
            }
            runs += 1;
            if !kept {
                dropped.push(format!("{kind} T={horizon}"));
            }
        }
    }
    Outcome::new(dropped.is_empty(), format!("{runs} runs, optimal arm eliminated in {dropped:?}"))
}

/// Full-feedback comparison with the exact `L_z = 1` instead of the
/// reference protocol. Reported only; not a criterion.
fn full_ordering_with_exact_lz() -> String {
    EnvKind::ALL
        .into_iter()
        .map(|kind| {
            let algorithms = vec![Algorithm::Doop, Algorithm::SequOol, Algorithm::SZooming];
            let mut config = experiment(kind, FeedbackMode::Full, 500, algorithms);
            config.zooming.lz = LzSetting::Value(1.0);
            let exp = run_experiment(&config, workers_from_env()).expect("full-feedback sweep");
            let doop = exp.stats(Algorithm::Doop).unwrap().wall_clock_mean;
            let zoom = exp.stats(Algorithm::SZooming).unwrap().wall_clock_mean;
            let note = ordering_notes(&exp, Algorithm::Doop, &[Algorithm::SZooming, Algorithm::SequOol]).1;
            format!("{note}, runtime ratio {:.0}", zoom / doop)
        })
        .collect::<Vec<_>>()
        .join("; ")
}

/// Sampled-feedback comparison at a horizon where SOOP's schedule is
/// nonempty. Reported only; not a criterion.
fn sampled_ordering_at_feasible_horizon() -> String {
    let horizon = 20_000;
    EnvKind::ALL
        .into_iter()
        .map(|kind| {
            let algorithms = vec![Algorithm::Soop, Algorithm::StoSoo, Algorithm::StroquOol, Algorithm::SZooming];
            let config = experiment(kind, FeedbackMode::Sampled, horizon, algorithms);
            match run_experiment(&config, workers_from_env()) {
                Ok(exp) => {
                    ordering_notes(
                        &exp,
                        Algorithm::Soop,
                        &[Algorithm::SZooming, Algorithm::StroquOol, Algorithm::StoSoo],
                    )
                    .1
                }
                Err(e) => format!("{kind}: {e}"),
            }
        })
        .collect::<Vec<_>>()
        .join("; ")
}

fn main() -> ExitCode {
    let criteria: [(&str, Check); 10] = [
        ("SOOP budget exactness", budget_exactness),
        ("h_max arithmetic", hmax_arithmetic),
        ("decoupled risk interval", sensitivity_interval),
        ("DOOP representative quality", representative_quality),
        ("empirical risk concentration", concentration_rate),
        ("regret ordering at T=500", regret_ordering),
        ("runtime ordering at T=500", runtime_ordering),
        ("Lambert W accuracy", lambert_w_accuracy),
        ("byte-identical CSV output", determinism),
        ("zooming keeps the optimal arm", zooming_soundness),
    ];
    let mut failed = 0;
    for (i, (title, check)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let verdict = if outcome.pass { "PASS" } else { "FAIL" };
        failed += usize::from(!outcome.pass);
        println!(
            "criterion {:>2} {verdict} {title}: {} [{:.2}s]",
            i + 1,
            outcome.detail,
            start.elapsed().as_secs_f64()
        );
    }
    let start = Instant::now();
    println!(
        "info: full feedback at T=500 with L_z=1: {} [{:.2}s]",
        full_ordering_with_exact_lz(),
        start.elapsed().as_secs_f64()
    );
    let start = Instant::now();
    println!(
        "info: sampled feedback at T=20000: {} [{:.2}s]",
        sampled_ordering_at_feasible_horizon(),
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        println!("{failed} of 10 criteria failed");
        ExitCode::FAILURE
    } else {
        println!("all 10 criteria passed");
        ExitCode::SUCCESS
    }
}
