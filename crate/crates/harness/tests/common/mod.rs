use esnlab::config::{ExperimentConfig, Optimizer};
use esnlab_core::dynamics::{make_dataset, DatasetVariant, TimeSeriesDataset};
use esnlab_core::validation::StrategyKind;
use std::sync::OnceLock;

pub fn lorenz() -> TimeSeriesDataset {
    static DS: OnceLock<TimeSeriesDataset> = OnceLock::new();
    DS.get_or_init(|| make_dataset(DatasetVariant::LorenzShort, 0).unwrap()).clone()
}

/// Small Lorenz config: 2 x 2 grid, 4 + 2 BO evaluations, 2 test starts.
pub fn tiny(n: usize, strategies: &[StrategyKind], optimizers: &[Optimizer]) -> ExperimentConfig {
    let mut c = ExperimentConfig::for_variant(DatasetVariant::LorenzShort);
    c.n_ensemble = n;
    c.strategies = strategies.to_vec();
    c.optimizers = optimizers.to_vec();
    c.reservoir.n_r = 30;
    c.grid = [2, 2];
    c.bo.n_start = [2, 2];
    c.bo.n_acquire = 2;
    c.bo.lattice = 12;
    c.bo.polish_iters = 5;
    c.test.count = Some(2);
    c.workers = 1;
    c
}
