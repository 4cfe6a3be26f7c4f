use esnlab::config::{Architecture, ExperimentConfig, Optimizer};
use esnlab::HarnessError;
use esnlab_core::dynamics::DatasetVariant;
use esnlab_core::hpo::Scale;
use esnlab_core::validation::StrategyKind;

#[test]
fn defaults_follow_the_system() {
    let l = ExperimentConfig::for_variant(DatasetVariant::LorenzShort);
    assert_eq!(l.n_ensemble, 50);
    assert_eq!(l.reservoir.b_in, 1.0);
    assert_eq!(l.space.rho.scale, Scale::Linear);
    assert!(!l.strategies.contains(&StrategyKind::WfvCStar));
    assert_eq!(l.optimizers, vec![Optimizer::Grid, Optimizer::Bayes]);
    let k = ExperimentConfig::for_variant(DatasetVariant::KuznetsovChaotic);
    assert_eq!(k.reservoir.b_in, 0.1);
    assert_eq!(k.space.rho.scale, Scale::Log10);
    assert!(ExperimentConfig::for_variant(DatasetVariant::LorenzLong)
        .strategies
        .contains(&StrategyKind::WfvCStar));
}

#[test]
fn toml_overlays_defaults() {
    let cfg = ExperimentConfig::from_toml_str(
        r#"
        dataset = "kuznetsov_quasiperiodic"
        n_ensemble = 4
        strategies = ["RV", "KFV_c"]
        optimizers = ["BO"]
        [bo]
        n_acquire = 3
        [reservoir]
        n_r = 20
        "#,
    )
    .unwrap();
    assert_eq!(cfg.dataset, DatasetVariant::KuznetsovQuasiperiodic);
    assert_eq!(cfg.n_ensemble, 4);
    assert_eq!(cfg.strategies, vec![StrategyKind::Rv, StrategyKind::KfvC]);
    assert_eq!(cfg.bo.n_acquire, 3);
    assert_eq!(cfg.bo.n_start, [5, 5]);
    assert_eq!(cfg.reservoir.n_r, 20);
    assert_eq!(cfg.reservoir.b_in, 0.1);
    let back = ExperimentConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
    assert_eq!(back, cfg);
}

#[test]
fn incompatible_combinations_are_rejected() {
    for text in [
        "dataset = \"kuznetsov_chaotic\"\narchitecture = \"pod_informed\"",
        "dataset = \"lorenz_short\"\narchitecture = \"fe_informed\"",
        "dataset = \"lorenz_short\"\nstrategies = [\"WFV_c*\"]",
        "n_ensemble = 0",
        "grid = [0, 3]",
        "optimizers = []",
        "strategies = [\"XYZ\"]",
        "n_ensembel = 3 = 4",
    ] {
        assert!(
            matches!(ExperimentConfig::from_toml_str(text), Err(HarnessError::Config(_))),
            "accepted: {text}"
        );
    }
    let ok = ExperimentConfig::from_toml_str("dataset = \"lorenz_long\"\narchitecture = \"pod_informed\"").unwrap();
    assert_eq!(ok.architecture, Architecture::PodInformed);
}

#[test]
fn hash_ignores_execution_settings() {
    let a = ExperimentConfig::for_variant(DatasetVariant::LorenzShort);
    let mut b = a.clone();
    b.workers = 7;
    b.out_dir = Some("/tmp/x".into());
    b.cache_dir = Some("/tmp/y".into());
    assert_eq!(a.hash(), b.hash());
    assert_eq!(a.hash(), ExperimentConfig::for_variant(DatasetVariant::LorenzShort).hash());
    b.master_seed += 1;
    assert_ne!(a.hash(), b.hash());
    assert_eq!(a.hash().len(), 64);
}

#[test]
fn missing_file_reports_its_path() {
    let err = ExperimentConfig::load(std::path::Path::new("/nonexistent/c.toml")).unwrap_err();
    assert!(err.to_string().contains("/nonexistent/c.toml"));
}
