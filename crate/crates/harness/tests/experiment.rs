mod common;

use common::{lorenz, tiny};
use esnlab::config::Optimizer;
use esnlab::experiment::{run_experiment_on, SearchTrace};
use esnlab_core::validation::StrategyKind;

#[test]
fn single_network_grid_counts() {
    let cfg = tiny(1, &[StrategyKind::Ssv], &[Optimizer::Grid]);
    let rec = run_experiment_on(&cfg, lorenz()).unwrap();
    assert_eq!(rec.runs.len(), 1);
    let r = &rec.runs[0];
    assert_eq!(r.evaluations, 4);
    assert_eq!(r.ridge_solves, 4);
    assert!(matches!(&r.search, SearchTrace::Grid { table } if table.len() == 4));
    // one retrain, scored on the configured test starts
    assert_eq!(r.test.len(), 2);
    assert_eq!(r.failed_evaluations, 0);
    let best = r.search.points().iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    assert_eq!(r.validation, best);
    assert_eq!(rec.config_hash, cfg.hash());
}

#[test]
fn every_triple_once_and_worker_count_irrelevant() {
    let strategies = [StrategyKind::Ssv, StrategyKind::RvC];
    let optimizers = [Optimizer::Grid, Optimizer::Bayes];
    let mut cfg = tiny(3, &strategies, &optimizers);
    let one = run_experiment_on(&cfg, lorenz()).unwrap();
    cfg.workers = 3;
    let three = run_experiment_on(&cfg, lorenz()).unwrap();
    assert_eq!(one.comparable(), three.comparable());
    assert_eq!(one.runs.len(), 3 * 2 * 2);
    for n in 0..3 {
        for s in strategies {
            for o in optimizers {
                let hits = one
                    .runs
                    .iter()
                    .filter(|r| r.network == n && r.strategy == s && r.optimizer == o)
                    .count();
                assert_eq!(hits, 1);
            }
        }
    }
    assert!(one.failures.is_empty());
    // networks differ, and each BO run used its full budget
    assert_ne!(one.runs[0].seed, one.runs[4].seed);
    for r in one.runs.iter().filter(|r| r.optimizer == Optimizer::Bayes) {
        assert_eq!(r.evaluations, 6);
    }
}

#[test]
fn repeated_runs_are_identical() {
    let cfg = tiny(2, &[StrategyKind::KfvC], &[Optimizer::Bayes]);
    let a = run_experiment_on(&cfg, lorenz()).unwrap();
    let b = run_experiment_on(&cfg, lorenz()).unwrap();
    assert_eq!(a.comparable(), b.comparable());
}

#[test]
fn cost_table_counts_solves_per_evaluation() {
    let cfg = tiny(1, &[StrategyKind::Kfv, StrategyKind::Rv, StrategyKind::KfvC, StrategyKind::RvC], &[Optimizer::Grid]);
    let rec = run_experiment_on(&cfg, lorenz()).unwrap();
    let per = |s| rec.cost.iter().find(|c| c.strategy == s).unwrap().ridge_solves_per_evaluation;
    assert_eq!(per(StrategyKind::Kfv), 4.0);
    assert_eq!(per(StrategyKind::Rv), 1.0);
    assert_eq!(per(StrategyKind::KfvC), 10.0);
    assert_eq!(per(StrategyKind::RvC), 1.0);
}

#[test]
fn shared_network_repeats_network_zero() {
    let mut cfg = tiny(2, &[StrategyKind::Ssv], &[Optimizer::Grid]);
    cfg.shared_network = true;
    let rec = run_experiment_on(&cfg, lorenz()).unwrap();
    assert_eq!(rec.runs[0].seed, rec.runs[1].seed);
    assert_eq!(rec.runs[0].test, rec.runs[1].test);
}

#[test]
fn failing_networks_are_recorded_and_the_run_continues() {
    let mut cfg = tiny(2, &[StrategyKind::Ssv], &[Optimizer::Grid]);
    // an essentially empty recurrent matrix has no spectral radius to set
    cfg.reservoir.n_r = 2;
    cfg.reservoir.sparseness = 0.999_999;
    let rec = run_experiment_on(&cfg, lorenz()).unwrap();
    assert!(rec.runs.is_empty());
    assert_eq!(rec.failures.iter().map(|f| f.network).collect::<Vec<_>>(), vec![0, 1]);
    assert!(rec.failures[0].error.contains("spectral radius"));
    assert_eq!(rec.spearman[0].pooled, None);
}
