use perfopt::baselines::{run_blackbox, run_szooming, BlackBox, FeedbackMode, Zooming, ZoomingParams};
use perfopt::doop::{doop_hmax, run_doop};
use perfopt::environment::{pairwise_lipschitz, Domain, EnvKind, GroundTruth};
use perfopt::metrics::RunTrace;
use perfopt::partition::PartitionConfig;
use perfopt::run::{Budget, Site};
use perfopt::soop::{run_soop, soop_budgets};
use perfopt::Error;

#[test]
fn doop_opening_quotas_follow_the_schedule() {
    for t in [100usize, 500, 1000, 3000] {
        let mut env = EnvKind::AckleyExpRastrigin.build(0);
        let run = run_doop(&mut env, Budget::new(t), &PartitionConfig::default()).unwrap();
        let h_max = doop_hmax(t, 2).unwrap();
        let state = &run.state;
        assert_eq!(state.deployments_used(), 1 + 4 * state.openings());
        assert!(state.deployments_used() <= t);
        // Cells at the deepest representable level are never opened.
        let limit = PartitionConfig::default().depth_limit(2) as usize;
        for h in 1..=h_max.min(limit - 1) {
            let evaluated = state.layer(h).len();
            let opened = state.layer(h).iter().filter(|&&id| state.records[id].opened).count();
            assert_eq!(opened, (h_max / h).min(evaluated), "T={t} h={h}");
            // Opened cells are the best evaluated ones at their depth.
            let worst_opened = state
                .layer(h)
                .iter()
                .filter(|&&id| state.records[id].opened)
                .map(|&id| state.records[id].pr)
                .fold(f64::NEG_INFINITY, f64::max);
            for &id in state.layer(h).iter().filter(|&&id| !state.records[id].opened) {
                assert!(state.records[id].pr >= worst_opened);
            }
        }
        let min_pr = state.records.iter().map(|r| r.pr).fold(f64::INFINITY, f64::min);
        assert_eq!(run.best_pr, min_pr);
    }
}

#[test]
fn doop_returns_its_best_deployment() {
    for kind in EnvKind::ALL {
        let mut env = kind.build(0);
        let run = run_doop(&mut env, Budget::new(1000), &PartitionConfig::default()).unwrap();
        let trace = RunTrace::from_output(&run.output, &env, env.optimum(), 0.0);
        assert!(trace.simple_regret.unwrap() <= trace.min_inst_regret().unwrap() + 1e-9);
        assert_eq!(trace.len(), run.state.deployments_used());
    }
}

#[test]
fn identical_seeds_give_identical_runs() {
    let config = PartitionConfig::default();
    for kind in EnvKind::ALL {
        let a = run_soop(&mut kind.build(4), Budget::new(10_000), 10, &config).unwrap();
        let b = run_soop(&mut kind.build(4), Budget::new(10_000), 10, &config).unwrap();
        assert_eq!(a.output, b.output);
        let c = run_soop(&mut kind.build(5), Budget::new(10_000), 10, &config).unwrap();
        assert_ne!(a.output.deployments, c.output.deployments);
        for name in BlackBox::ALL {
            let x =
                run_blackbox(name, &mut kind.build(2), Budget::new(5000), &config, 10, &Default::default()).unwrap();
            let y =
                run_blackbox(name, &mut kind.build(2), Budget::new(5000), &config, 10, &Default::default()).unwrap();
            assert_eq!(x, y, "{name}");
        }
    }
}

#[test]
fn soop_phases_respect_their_budget_shares() {
    for t in [1000usize, 10_000, 20_000, 100_000] {
        let mut env = EnvKind::RastriginExpAckley.build(0);
        let run = run_soop(&mut env, Budget::new(t), 10, &PartitionConfig::default()).unwrap();
        let c = &run.state.counters;
        assert!(4 * (c.init + c.exploration) <= 3 * t, "T={t} {c:?}");
        assert!(4 * c.validation <= t, "T={t} {c:?}");
        assert_eq!(c.total(), run.output.deployments.len());
        assert_eq!(c.total(), run.state.deployments_used());
        let (h_max, p_max) = soop_budgets(t, 2).unwrap();
        assert_eq!(c.validation, (p_max + 1) * h_max);
        assert!(run.output.deployments.iter().all(|d| d.samples == 10));
        // Every deployment of a cell is accounted for in its n_deploy.
        let deployed: usize = run.state.records.iter().map(|r| r.n_deploy).sum();
        assert_eq!(deployed, c.init + c.exploration);
    }
}

#[test]
fn soop_refuses_tiny_budgets() {
    let mut env = EnvKind::AckleyExpRastrigin.build(0);
    let err = run_soop(&mut env, Budget::new(128), 10, &PartitionConfig::default()).unwrap_err();
    assert_eq!(err, Error::BudgetTooSmall { horizon: 128, dim: 2 });
    assert_eq!(env.draws(), 0);
}

#[test]
fn capped_runs_stop_exactly_at_the_cap() {
    let config = PartitionConfig::default();
    for cap in [1usize, 2, 7, 50, 123] {
        let mut env = EnvKind::AckleyExpRastrigin.build(0);
        assert_eq!(run_doop(&mut env, Budget::capped(1000, cap), &config).unwrap().output.deployments.len(), cap);
        let mut env = EnvKind::AckleyExpRastrigin.build(0);
        assert_eq!(run_soop(&mut env, Budget::capped(10_000, cap), 10, &config).unwrap().output.deployments.len(), cap);
        for name in BlackBox::ALL {
            let mut env = EnvKind::RastriginExpAckley.build(0);
            let out =
                run_blackbox(name, &mut env, Budget::capped(10_000, cap), &config, 10, &Default::default()).unwrap();
            assert_eq!(out.deployments.len(), cap, "{name} cap={cap}");
        }
    }
}

fn exact_params(env: &perfopt::environment::AdditiveExpEnv, grid: &[Vec<f64>], mode: FeedbackMode) -> ZoomingParams {
    let epsilon = pairwise_lipschitz(|t| env.rate(t), grid);
    ZoomingParams { lz: 1.0, epsilon, alpha: 1.0, mode, m0: 10 }
}

#[test]
fn zooming_intervals_contain_the_true_risk() {
    for kind in EnvKind::ALL {
        let mut env = kind.build(0);
        let grid = env.domain().grid(55);
        let params = exact_params(&env, &grid, FeedbackMode::Full);
        let mut zoom = Zooming::new(grid, params, Budget::new(200)).unwrap();
        while zoom.step(&mut env).unwrap().is_some() {
            for arm in zoom.arms().iter().filter(|a| a.active) {
                let pr = env.true_pr(&arm.theta);
                assert!(arm.lower <= pr + 1e-9 && pr <= arm.upper + 1e-9, "{kind} {arm:?}");
            }
        }
        assert_eq!(zoom.deployments_used(), 200);
    }
}

#[test]
fn zooming_never_drops_the_optimum() {
    for kind in EnvKind::ALL {
        let mut env = kind.build(0);
        let grid = env.domain().grid(55);
        let optimum = 27 * 55 + 27;
        assert_eq!(grid[optimum], vec![0.0, 0.0]);
        let params = exact_params(&env, &grid, FeedbackMode::Full);
        let mut zoom = Zooming::new(grid, params, Budget::new(150)).unwrap();
        while zoom.step(&mut env).unwrap().is_some() {
            assert!(zoom.arms()[optimum].active);
            for arm in zoom.arms() {
                assert!(arm.lower <= arm.upper);
            }
        }
        let out = zoom.into_output().unwrap();
        assert_eq!(out.best_site, Site::Arm(optimum));
    }
}

#[test]
fn sampled_zooming_spends_the_budget() {
    let mut env = EnvKind::RastriginExpAckley.build(0);
    let grid = env.domain().grid(21);
    let params = exact_params(&env, &grid, FeedbackMode::Sampled);
    let out = run_szooming(&mut env, Budget::new(60), grid, params).unwrap();
    assert_eq!(out.deployments.len(), 60);
    assert!(out.deployments.iter().all(|d| d.samples == 10));
}

#[test]
fn soop_regression_on_rastrigin_base() {
    let config = PartitionConfig::default();
    let finals: Vec<f64> = (0..20)
        .map(|seed| {
            let mut env = EnvKind::RastriginExpAckley.build(seed);
            let run = run_soop(&mut env, Budget::new(20_000), 10, &config).unwrap();
            env.true_pr(&run.output.best)
        })
        .collect();
    let mean = finals.iter().sum::<f64>() / 20.0;
    let std = (finals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 19.0).sqrt();
    assert!(mean <= 1.0, "mean PR {mean} (std {std})");
}
