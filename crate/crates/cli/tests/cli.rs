use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use perfopt::baselines::FeedbackMode;
use perfopt::environment::EnvKind;
use perfopt_harness::analyze::{analyze, REPORT_FILE};
use perfopt_harness::runner::{run_experiment, trace_path, write_experiment, Metadata, AGGREGATE_FILE, METADATA_FILE};
use perfopt_harness::{Algorithm, ExperimentConfig};

fn perfopt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_perfopt")).args(args).env("PERFOPT_WORKERS", "2").output().unwrap()
}

fn small_full(dir: &Path) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(
        "small",
        EnvKind::RastriginExpAckley,
        FeedbackMode::Full,
        300,
        vec![Algorithm::Doop, Algorithm::Soo, Algorithm::SequOol, Algorithm::SZooming],
    );
    c.seeds = vec![0, 1, 2];
    c.zooming.grid_per_axis = 15;
    c.output = dir.to_path_buf();
    c
}

#[test]
fn aggregate_curve_is_the_mean_over_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_full(dir.path());
    let exp = run_experiment(&config, 2).unwrap();
    for stats in &exp.aggregate.algorithms {
        let runs: Vec<_> = exp.runs_of(stats.algorithm).collect();
        assert_eq!(runs.len(), 3);
        for t in 0..stats.steps {
            let mean = runs.iter().map(|r| r.trace.records[t].cum_regret).sum::<f64>() / 3.0;
            assert!((stats.mean[t] - mean).abs() <= 1e-9 * mean.abs().max(1.0));
        }
        assert_eq!(stats.deployments, runs.iter().map(|r| r.summary.deployments).collect::<Vec<_>>());
    }
}

#[test]
fn run_then_analyze_reports_theory_and_equal_budgets() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_full(dir.path());
    let path = dir.path().join("small.toml");
    fs::write(&path, config.to_toml()).unwrap();
    let out = perfopt(&["run", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for a in &config.algorithms {
        for s in &config.seeds {
            assert!(trace_path(dir.path(), *a, *s).is_file());
        }
    }
    assert!(dir.path().join(AGGREGATE_FILE).is_file());

    let meta: Metadata = serde_json::from_str(&fs::read_to_string(dir.path().join(METADATA_FILE)).unwrap()).unwrap();
    assert!(meta.zooming_epsilon > 0.0);
    assert_eq!(meta.x_axis, "deployments");
    assert_eq!(meta.config, config);

    let out = perfopt(&["analyze", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join(REPORT_FILE)).unwrap()).unwrap();
    assert!(report["sensitivity"]["epsilon"].as_f64().unwrap() > 0.0);
    assert_eq!(report["equal_budget"], true);
    let overlay = report["overlays"].as_array().unwrap().iter().find(|o| o["horizon"] == 1000).unwrap();
    assert_eq!(overlay["doop_h_max"], 33);
    let d = report["near_optimality"]["d"].as_f64().unwrap();
    assert!((0.0..=2.0).contains(&d));
}

#[test]
fn analyze_rejects_empty_directories() {
    let dir = tempfile::tempdir().unwrap();
    assert!(analyze(dir.path()).is_err());
    let out = perfopt(&["analyze", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invalid_configs_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, "name = 'x'\nenvironment = 'nowhere'\nmode = 'full'\nhorizon = 10\nalgorithms = ['doop']\n")
        .unwrap();
    assert_eq!(perfopt(&["run", path.to_str().unwrap()]).status.code(), Some(2));
    fs::write(
        &path,
        "name = 'x'\nenvironment = 'ackley_exp_rastrigin'\nmode = 'full'\nhorizon = 500\nalgorithms = ['soop']\n",
    )
    .unwrap();
    assert_eq!(perfopt(&["run", path.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(perfopt(&["run", dir.path().join("absent.toml").to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn infeasible_budgets_exit_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let mut c =
        ExperimentConfig::new("tiny", EnvKind::AckleyExpRastrigin, FeedbackMode::Sampled, 500, vec![Algorithm::Soop]);
    c.seeds = vec![0];
    c.output = dir.path().join("out");
    let path = dir.path().join("tiny.toml");
    fs::write(&path, c.to_toml()).unwrap();
    let out = perfopt(&["run", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(!c.output.join(METADATA_FILE).exists());
}

#[test]
fn repeated_runs_write_identical_csvs() {
    let config = |dir: &Path| {
        let mut c = ExperimentConfig::new(
            "repeat",
            EnvKind::AckleyExpRastrigin,
            FeedbackMode::Sampled,
            2000,
            vec![Algorithm::Soop, Algorithm::StoSoo, Algorithm::StroquOol, Algorithm::SZooming],
        );
        c.seeds = vec![4];
        c.zooming.grid_per_axis = 11;
        c.output = dir.to_path_buf();
        c
    };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [a.path(), b.path()] {
        let c = config(dir);
        write_experiment(&run_experiment(&c, 1).unwrap(), dir).unwrap();
    }
    for alg in config(a.path()).algorithms {
        let x = fs::read(trace_path(a.path(), alg, 4)).unwrap();
        let y = fs::read(trace_path(b.path(), alg, 4)).unwrap();
        assert!(!x.is_empty());
        assert_eq!(x, y, "{alg}");
    }
}

#[test]
fn oracle_dumps_the_landscape() {
    let out = perfopt(&["oracle", "rastrigin_exp_ackley", "--resolution", "5"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 26);
    assert_eq!(lines[0], "theta_0,theta_1,pr");
    assert_eq!(lines[13], "0,0,0");

    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("land.csv");
    let out = perfopt(&["oracle", "ackley_exp_rastrigin", "--resolution", "3", "--output", file.to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(fs::read_to_string(&file).unwrap().lines().count(), 10);
    assert_eq!(perfopt(&["oracle", "sphere"]).status.code(), Some(2));
}
