mod common;

use common::{lorenz, tiny};
use esnlab::config::Optimizer;
use esnlab::experiment::run_experiment_on;
use esnlab::study::{representative_network, run_convergence_sweep, run_fixed_hp_study, FixedHpMode, SweepAxis};
use esnlab_core::validation::StrategyKind;

#[test]
fn identical_networks_make_the_modes_coincide() {
    for optimizer in [Optimizer::Grid, Optimizer::Bayes] {
        let mut cfg = tiny(3, &[StrategyKind::Ssv], &[optimizer]);
        cfg.shared_network = true;
        let study = run_fixed_hp_study(&cfg, lorenz(), StrategyKind::Ssv, optimizer, None).unwrap();
        let ind = study.mode(FixedHpMode::Independent).unwrap();
        for mode in [FixedHpMode::FixedEnsembleOpt, FixedHpMode::FixedSingleNetwork] {
            let m = study.mode(mode).unwrap();
            assert_eq!(m.points, ind.points, "{optimizer} {mode}");
            assert_eq!(m.test_mse, ind.test_mse, "{optimizer} {mode}");
            assert_eq!(m.test_ph, ind.test_ph, "{optimizer} {mode}");
        }
    }
}

#[test]
fn ensemble_point_minimizes_the_mean_objective() {
    let cfg = tiny(3, &[StrategyKind::KfvC], &[Optimizer::Grid, Optimizer::Bayes]);
    let base = run_experiment_on(&cfg, lorenz()).unwrap();
    for optimizer in [Optimizer::Grid, Optimizer::Bayes] {
        let study = run_fixed_hp_study(&cfg, lorenz(), StrategyKind::KfvC, optimizer, Some(&base)).unwrap();
        assert!(!study.candidates.is_empty());
        for c in &study.candidates {
            assert!(study.ensemble_objective <= c.value);
        }
        let fixed = study.mode(FixedHpMode::FixedEnsembleOpt).unwrap();
        assert!(fixed.points.iter().all(|p| *p == fixed.points[0]));
        let single = study.mode(FixedHpMode::FixedSingleNetwork).unwrap();
        let rep = base.select(StrategyKind::KfvC, optimizer)[study.representative].best_point;
        assert!(single.points.iter().all(|p| *p == rep));
        // the representative network keeps its own optimum, so its test
        // result is unchanged
        let ind = study.mode(FixedHpMode::Independent).unwrap();
        assert_eq!(single.test_mse[study.representative], ind.test_mse[study.representative]);
    }
    // grid mode (i) reuses the tables, so recomputing it agrees
    let reused = run_fixed_hp_study(&cfg, lorenz(), StrategyKind::KfvC, Optimizer::Grid, Some(&base)).unwrap();
    let mut grid_only = cfg.clone();
    grid_only.optimizers = vec![Optimizer::Grid];
    grid_only.strategies = vec![StrategyKind::KfvC];
    let fresh = run_fixed_hp_study(&grid_only, lorenz(), StrategyKind::KfvC, Optimizer::Grid, None).unwrap();
    assert_eq!(reused.candidates, fresh.candidates);
}

#[test]
fn representative_is_the_median_network() {
    let cfg = tiny(4, &[StrategyKind::Ssv], &[Optimizer::Grid]);
    let rec = run_experiment_on(&cfg, lorenz()).unwrap();
    let runs = rec.select(StrategyKind::Ssv, Optimizer::Grid);
    let rep = representative_network(&runs).unwrap();
    let below = runs.iter().filter(|r| r.validation < runs[rep].validation).count();
    assert_eq!(below, 1);
    assert_eq!(representative_network(&[]), None);
}

#[test]
fn sweeps_grow_to_the_requested_size() {
    let cfg = tiny(3, &[StrategyKind::Ssv], &[Optimizer::Grid]);
    let rec = run_experiment_on(&cfg, lorenz()).unwrap();
    let one = run_convergence_sweep(&rec, StrategyKind::Ssv, Optimizer::Grid, SweepAxis::NEnsemble, 1).unwrap();
    assert_eq!(one.rows.len(), 1);
    assert_eq!(one.rows[0].mse.p50, rec.runs[0].test_mse);
    let full = run_convergence_sweep(&rec, StrategyKind::Ssv, Optimizer::Grid, SweepAxis::NEnsemble, 3).unwrap();
    assert_eq!(full.rows.iter().map(|r| r.size).collect::<Vec<_>>(), vec![1, 2, 3]);
    let starts = run_convergence_sweep(&rec, StrategyKind::Ssv, Optimizer::Grid, SweepAxis::NTestStarts, 2).unwrap();
    let last = starts.at(2).unwrap();
    let mses: Vec<f64> = rec.runs.iter().map(|r| r.test_mse).collect();
    assert_eq!(last.mse.p50, esnlab_core::metrics::median(&mses).unwrap());
    assert!(run_convergence_sweep(&rec, StrategyKind::Ssv, Optimizer::Grid, SweepAxis::NEnsemble, 4).is_err());
    assert!(run_convergence_sweep(&rec, StrategyKind::Ssv, Optimizer::Grid, SweepAxis::NTestStarts, 0).is_err());
}
