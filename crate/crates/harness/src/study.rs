//! Appendix studies: fixed versus independent hyperparameters, and
//! convergence of ensemble percentiles.

use crate::config::{ExperimentConfig, Optimizer};
use crate::experiment::{
    bayes_seed, run_experiment_on, summarize_test, thread_pool, ExperimentRecord, NetworkRun, Prepared, SearchTrace,
};
use crate::HarnessError;
use esnlab_core::dynamics::TimeSeriesDataset;
use esnlab_core::hpo::{bayesian_optimize, grid_search, Point};
use esnlab_core::metrics::{self, Quartiles};
use esnlab_core::reservoir::{EsnHyperparams, ReservoirMatrices};
use esnlab_core::validation::StrategyKind;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::convert::Infallible;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixedHpMode {
    /// Every network keeps its own optimum.
    Independent,
    /// Mode (i): one point minimizing the ensemble-mean validation objective.
    FixedEnsembleOpt,
    /// Mode (ii): the optimum of the representative network, for all.
    FixedSingleNetwork,
}

impl FixedHpMode {
    pub const ALL: [FixedHpMode; 3] = [
        FixedHpMode::Independent,
        FixedHpMode::FixedEnsembleOpt,
        FixedHpMode::FixedSingleNetwork,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            FixedHpMode::Independent => "independent",
            FixedHpMode::FixedEnsembleOpt => "fixed_ensemble_opt",
            FixedHpMode::FixedSingleNetwork => "fixed_single_network",
        }
    }
}

impl fmt::Display for FixedHpMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeResult {
    pub mode: FixedHpMode,
    /// Point used by each network, in network order.
    pub points: Vec<Point>,
    pub test_mse: Vec<f64>,
    pub test_ph: Vec<Option<f64>>,
    pub mse_quartiles: Option<Quartiles>,
    pub ph_quartiles: Option<Quartiles>,
}

impl ModeResult {
    fn new(mode: FixedHpMode, points: Vec<Point>, test_mse: Vec<f64>, test_ph: Vec<Option<f64>>) -> Self {
        let phs: Vec<f64> = test_ph.iter().flatten().copied().collect();
        Self {
            mode,
            mse_quartiles: Quartiles::of(&test_mse).ok(),
            ph_quartiles: Quartiles::of(&phs).ok(),
            points,
            test_mse,
            test_ph,
        }
    }

    pub fn median_ph(&self) -> Option<f64> {
        self.ph_quartiles.map(|q| q.p50)
    }
}

/// Ensemble-mean validation objective at one candidate of mode (i).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub point: Point,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedHpRecord {
    pub config_hash: String,
    pub strategy: StrategyKind,
    pub optimizer: Optimizer,
    /// Network of mode (ii).
    pub representative: usize,
    /// Candidates evaluated by the mode (i) search.
    pub candidates: Vec<Candidate>,
    /// Mean validation objective (mean log10 MSE, i.e. the log of the
    /// geometric-mean MSE) at the mode (i) point.
    pub ensemble_objective: f64,
    pub modes: Vec<ModeResult>,
}

impl FixedHpRecord {
    pub fn mode(&self, mode: FixedHpMode) -> Option<&ModeResult> {
        self.modes.iter().find(|m| m.mode == mode)
    }
}

/// Mean that returns `x` exactly when every value equals `x`, so identical
/// networks give the same objective as a single one.
fn running_mean(values: &[f64]) -> f64 {
    let mut m = 0.0;
    for (k, v) in values.iter().enumerate() {
        m += (v - m) / (k + 1) as f64;
    }
    m
}

/// Network whose validation objective is the ensemble median (the lower
/// median for an even count; ties go to the lower network index).
pub fn representative_network(runs: &[&NetworkRun]) -> Option<usize> {
    let mut order: Vec<&NetworkRun> = runs.to_vec();
    order.sort_by(|a, b| a.validation.total_cmp(&b.validation).then(a.network.cmp(&b.network)));
    order.get(order.len().checked_sub(1)? / 2).map(|r| r.network)
}

/// Compares independent optimization with the two fixed-hyperparameter
/// modes for one (strategy, optimizer) pair. `base` supplies the
/// independent runs; it is computed when absent.
pub fn run_fixed_hp_study(
    config: &ExperimentConfig,
    dataset: TimeSeriesDataset,
    strategy: StrategyKind,
    optimizer: Optimizer,
    base: Option<&ExperimentRecord>,
) -> Result<FixedHpRecord, HarnessError> {
    if !config.strategies.contains(&strategy) || !config.optimizers.contains(&optimizer) {
        return Err(HarnessError::Config(format!("{strategy}/{optimizer} is not part of the config")));
    }
    let computed;
    let base = match base {
        Some(b) => {
            if b.config_hash != config.hash() {
                return Err(HarnessError::Config("base record was produced by a different config".into()));
            }
            b
        }
        None => {
            let mut c = config.clone();
            c.strategies = vec![strategy];
            c.optimizers = vec![optimizer];
            computed = run_experiment_on(&c, dataset.clone())?;
            &computed
        }
    };
    let runs = base.select(strategy, optimizer);
    if runs.len() != config.n_ensemble {
        return Err(HarnessError::Config(format!(
            "base record has {} of {} networks for {strategy}/{optimizer}",
            runs.len(),
            config.n_ensemble
        )));
    }
    let prep = Prepared::new(config, dataset)?;
    let pool = thread_pool(config.workers)?;
    let networks: Vec<(EsnHyperparams, ReservoirMatrices)> = pool.install(|| {
        (0..config.n_ensemble)
            .into_par_iter()
            .map(|n| prep.matrices(n))
            .collect::<Result<Vec<_>, _>>()
    })?;
    let schedule = prep.schedule(strategy).expect("strategy checked above");

    let independent = ModeResult::new(
        FixedHpMode::Independent,
        runs.iter().map(|r| r.best_point).collect(),
        runs.iter().map(|r| r.test_mse).collect(),
        runs.iter().map(|r| r.test_ph).collect(),
    );

    // mode (i)
    let ensemble_value = |p: Point| -> f64 {
        let values: Vec<f64> = pool.install(|| {
            networks
                .par_iter()
                .map(|(hp, mats)| prep.objective(mats, hp, schedule, p).0)
                .collect()
        });
        running_mean(&values)
    };
    let space = config.space.space()?;
    let (fixed_point, ensemble_objective, candidates) = match optimizer {
        Optimizer::Grid => match grid_tables(&runs) {
            // every network already evaluated the same lattice
            Some(tables) => {
                let cands: Vec<Candidate> = (0..tables[0].len())
                    .map(|i| Candidate {
                        point: tables[0][i].0,
                        value: running_mean(&tables.iter().map(|t| t[i].1).collect::<Vec<_>>()),
                    })
                    .collect();
                let (i, v) = esnlab_core::hpo::argmin(cands.iter().map(|c| c.value)).expect("nonempty grid");
                (cands[i].point, v, cands)
            }
            None => {
                let r = grid_search(|p| Ok::<f64, Infallible>(ensemble_value(p)), &space, config.grid)
                    .map_err(|e| HarnessError::Config(e.to_string()))?;
                let cands = r.table.iter().map(|e| Candidate { point: e.point, value: e.value }).collect();
                (r.best_point, r.best_value, cands)
            }
        },
        Optimizer::Bayes => {
            let seed = bayes_seed(prep.network_seed(0), strategy);
            let r = bayesian_optimize(|p| Ok::<f64, Infallible>(ensemble_value(p)), &space, &config.bo, seed)?;
            let cands = r.trace.iter().map(|t| Candidate { point: t.point, value: t.value }).collect();
            (r.best_point, r.best_value, cands)
        }
    };

    let representative = representative_network(&runs).expect("nonempty ensemble");
    let single_point = runs[representative].best_point;

    let apply = |mode: FixedHpMode, p: Point| -> Result<ModeResult, HarnessError> {
        let results: Vec<(f64, Option<f64>)> = pool.install(|| {
            networks
                .par_iter()
                .map(|(hp, mats)| {
                    let test = prep.retrain_and_test(mats, hp, p)?;
                    let (mse, ph, _) = summarize_test(&test);
                    Ok::<_, HarnessError>((mse, ph))
                })
                .collect::<Result<Vec<_>, _>>()
        })?;
        let (mse, ph) = results.into_iter().unzip();
        Ok(ModeResult::new(mode, vec![p; config.n_ensemble], mse, ph))
    };
    let mode_i = apply(FixedHpMode::FixedEnsembleOpt, fixed_point)?;
    let mode_ii = apply(FixedHpMode::FixedSingleNetwork, single_point)?;

    Ok(FixedHpRecord {
        config_hash: config.hash(),
        strategy,
        optimizer,
        representative,
        candidates,
        ensemble_objective,
        modes: vec![independent, mode_i, mode_ii],
    })
}

/// Grid tables of every run when they all cover the same lattice.
fn grid_tables(runs: &[&NetworkRun]) -> Option<Vec<Vec<(Point, f64)>>> {
    let tables: Vec<Vec<(Point, f64)>> = runs
        .iter()
        .map(|r| match &r.search {
            SearchTrace::Grid { .. } => Some(r.search.points()),
            SearchTrace::Bayes { .. } => None,
        })
        .collect::<Option<_>>()?;
    let first: Vec<Point> = tables.first()?.iter().map(|e| e.0).collect();
    tables
        .iter()
        .all(|t| t.iter().map(|e| e.0).eq(first.iter().copied()))
        .then_some(tables)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    NEnsemble,
    NTestStarts,
}

impl FromStr for SweepAxis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.replace('-', "_").as_str() {
            "n_ensemble" => Ok(SweepAxis::NEnsemble),
            "n_test_starts" => Ok(SweepAxis::NTestStarts),
            _ => Err(format!("unknown sweep axis `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub size: usize,
    pub mse: Quartiles,
    pub ph: Option<Quartiles>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceSweep {
    pub config_hash: String,
    pub strategy: StrategyKind,
    pub optimizer: Optimizer,
    pub axis: SweepAxis,
    pub rows: Vec<SweepRow>,
}

impl ConvergenceSweep {
    pub fn at(&self, size: usize) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.size == size)
    }
}

/// Ensemble quartiles of test MSE and PH as a function of the number of
/// networks (first `n` networks) or of test starting points (first `n`
/// starts of every network), for `n = 1..=max`.
pub fn run_convergence_sweep(
    record: &ExperimentRecord,
    strategy: StrategyKind,
    optimizer: Optimizer,
    axis: SweepAxis,
    max: usize,
) -> Result<ConvergenceSweep, HarnessError> {
    let runs = record.select(strategy, optimizer);
    let available = match axis {
        SweepAxis::NEnsemble => runs.len(),
        SweepAxis::NTestStarts => runs.iter().map(|r| r.test.len()).min().unwrap_or(0),
    };
    if max == 0 || max > available {
        return Err(HarnessError::Config(format!("sweep maximum {max} outside 1..={available}")));
    }
    let rows = (1..=max)
        .map(|n| {
            let (mses, phs): (Vec<f64>, Vec<Option<f64>>) = match axis {
                SweepAxis::NEnsemble => runs[..n].iter().map(|r| (r.test_mse, r.test_ph)).unzip(),
                SweepAxis::NTestStarts => runs
                    .iter()
                    .map(|r| {
                        let (mse, ph, _) = summarize_test(&r.test[..n]);
                        (mse, ph)
                    })
                    .unzip(),
            };
            let phs: Vec<f64> = phs.into_iter().flatten().collect();
            Ok(SweepRow {
                size: n,
                mse: Quartiles::of(&mses)?,
                ph: Quartiles::of(&phs).ok(),
            })
        })
        .collect::<Result<Vec<_>, metrics::MetricsError>>()?;
    Ok(ConvergenceSweep {
        config_hash: record.config_hash.clone(),
        strategy,
        optimizer,
        axis,
        rows,
    })
}
