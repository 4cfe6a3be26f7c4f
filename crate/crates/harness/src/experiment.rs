//! Ensemble experiments: independent hyperparameter search per network,
//! retraining on the full train/validation span, and test scoring.

use crate::config::{Architecture, ExperimentConfig, Optimizer};
use crate::HarnessError;
use esnlab_core::dynamics::{DatasetCache, TimeSeriesDataset};
use esnlab_core::hpo::{bayesian_optimize, grid_search, GridEntry, Point, TraceEntry};
use esnlab_core::knowledge::KnowledgeFn;
use esnlab_core::metrics::{self, TestPoint, TestSuite};
use esnlab_core::reservoir::{init_matrices, EsnHyperparams, Knowledge, ReservoirMatrices};
use esnlab_core::seed;
use esnlab_core::validation::{
    evaluate_objective, fit_readout, FoldSchedule, ObjectiveContext, StrategyKind, ValidationGeometry, LOG_MSE_CAP,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::convert::Infallible;
use std::time::Instant;

/// Environment variable overriding the dataset cache directory.
pub const CACHE_ENV: &str = "ESNLAB_CACHE_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SearchTrace {
    Grid { table: Vec<GridEntry> },
    Bayes { trace: Vec<TraceEntry>, final_gains: [f64; 3] },
}

impl SearchTrace {
    /// Evaluated points and objective values in evaluation order.
    pub fn points(&self) -> Vec<(Point, f64)> {
        match self {
            SearchTrace::Grid { table } => table.iter().map(|e| (e.point, e.value)).collect(),
            SearchTrace::Bayes { trace, .. } => trace.iter().map(|t| (t.point, t.value)).collect(),
        }
    }
}

/// One (network, strategy, optimizer) result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkRun {
    pub network: usize,
    pub seed: u64,
    pub strategy: StrategyKind,
    pub optimizer: Optimizer,
    pub best_point: Point,
    /// Validation objective (mean log10 MSE over folds) at `best_point`.
    pub validation: f64,
    pub evaluations: usize,
    pub failed_evaluations: usize,
    pub ridge_solves: usize,
    pub folds: usize,
    pub optimize_seconds: f64,
    pub test_seconds: f64,
    pub test: Vec<TestPoint>,
    /// Geometric mean of the test MSEs.
    pub test_mse: f64,
    /// Arithmetic mean of the test horizons, in Lyapunov times.
    pub test_ph: Option<f64>,
    pub ph_censored: usize,
    pub search: SearchTrace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkFailure {
    pub network: usize,
    pub seed: u64,
    pub strategy: Option<StrategyKind>,
    pub optimizer: Option<Optimizer>,
    pub error: String,
}

/// Row of the ensemble table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleRow {
    pub network: usize,
    pub seed: u64,
    pub strategy: StrategyKind,
    pub optimizer: Optimizer,
    pub sigma_in: f64,
    pub rho: f64,
    pub validation_log10_mse: f64,
    pub test_mse: f64,
    pub test_ph: Option<f64>,
}

/// Spearman coefficient between validation objective and test MSE for one
/// strategy, pooling the optimizers as in the concatenated vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpearmanRow {
    pub strategy: StrategyKind,
    pub pooled: Option<f64>,
    pub per_optimizer: BTreeMap<Optimizer, Option<f64>>,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostRow {
    pub strategy: StrategyKind,
    pub optimizer: Optimizer,
    pub folds: usize,
    pub evaluations: usize,
    pub ridge_solves: usize,
    pub ridge_solves_per_evaluation: f64,
    pub optimize_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub dataset: String,
    pub runs: Vec<NetworkRun>,
    pub failures: Vec<NetworkFailure>,
    pub spearman: Vec<SpearmanRow>,
    /// Spearman between test MSE and test PH over all runs.
    pub mse_ph_spearman: Option<f64>,
    pub cost: Vec<CostRow>,
    pub wall_seconds: f64,
}

impl ExperimentRecord {
    pub fn rows(&self) -> Vec<EnsembleRow> {
        self.runs
            .iter()
            .map(|r| EnsembleRow {
                network: r.network,
                seed: r.seed,
                strategy: r.strategy,
                optimizer: r.optimizer,
                sigma_in: r.best_point[0],
                rho: r.best_point[1],
                validation_log10_mse: r.validation,
                test_mse: r.test_mse,
                test_ph: r.test_ph,
            })
            .collect()
    }

    /// Runs of one (strategy, optimizer) pair, in network order.
    pub fn select(&self, strategy: StrategyKind, optimizer: Optimizer) -> Vec<&NetworkRun> {
        self.runs
            .iter()
            .filter(|r| r.strategy == strategy && r.optimizer == optimizer)
            .collect()
    }

    pub fn spearman_for(&self, strategy: StrategyKind) -> Option<f64> {
        self.spearman.iter().find(|r| r.strategy == strategy).and_then(|r| r.pooled)
    }

    /// Copy with timing fields zeroed and execution settings (workers,
    /// directories) cleared, for comparing numeric outputs.
    pub fn comparable(&self) -> Self {
        let mut c = self.clone();
        c.wall_seconds = 0.0;
        c.config.workers = 0;
        c.config.out_dir = None;
        c.config.cache_dir = None;
        for r in &mut c.runs {
            r.optimize_seconds = 0.0;
            r.test_seconds = 0.0;
        }
        for row in &mut c.cost {
            row.optimize_seconds = 0.0;
        }
        c
    }
}

/// Everything shared read-only by the workers of one experiment.
pub struct Prepared {
    pub config: ExperimentConfig,
    pub dataset: TimeSeriesDataset,
    pub geometry: ValidationGeometry,
    pub knowledge: Option<KnowledgeFn>,
    pub suite: TestSuite,
    pub schedules: Vec<(StrategyKind, FoldSchedule)>,
}

impl Prepared {
    pub fn new(config: &ExperimentConfig, dataset: TimeSeriesDataset) -> Result<Self, HarnessError> {
        config.validate()?;
        let geometry = ValidationGeometry::for_variant(config.dataset);
        let spec = config.dataset.spec();
        let knowledge = match config.architecture {
            Architecture::ModelFree => None,
            Architecture::PodInformed => Some(KnowledgeFn::pod_galerkin(
                dataset.u.view(0..dataset.trainval_steps),
                config.n_pod,
                dataset.dt_network,
                spec.system.clone(),
                dataset.norm.clone(),
            )?),
            Architecture::FeInformed => Some(KnowledgeFn::forward_euler_y(
                spec.system.clone(),
                dataset.dt_network,
                dataset.norm.clone(),
            )?),
        };
        let washout = dataset.lt_steps(geometry.washout_lt);
        let mut suite = TestSuite::from_layout(&dataset, &spec.test, washout)?;
        suite.k_threshold = config.test.k_threshold;
        if let Some(n) = config.test.count {
            suite = suite.truncated(n);
        }
        let schedules = config
            .strategies
            .iter()
            .map(|&k| Ok((k, geometry.schedule(k, &dataset)?)))
            .collect::<Result<Vec<_>, HarnessError>>()?;
        Ok(Self {
            config: config.clone(),
            dataset,
            geometry,
            knowledge,
            suite,
            schedules,
        })
    }

    pub fn knowledge(&self) -> Option<&dyn Knowledge> {
        self.knowledge.as_ref().map(|k| k as &dyn Knowledge)
    }

    pub fn schedule(&self, kind: StrategyKind) -> Option<&FoldSchedule> {
        self.schedules.iter().find(|(k, _)| *k == kind).map(|(_, s)| s)
    }

    pub fn network_seed(&self, network: usize) -> u64 {
        let index = if self.config.shared_network { 0 } else { network as u64 };
        seed::derive(self.config.master_seed, seed::stream::NETWORK, index)
    }

    pub fn matrices(&self, network: usize) -> Result<(EsnHyperparams, ReservoirMatrices), HarnessError> {
        let hp = self.config.base_hp(self.network_seed(network));
        let mats = init_matrices(&hp, self.dataset.n_u())?;
        Ok((hp, mats))
    }

    /// Validation objective of a network at `p`; failures map to the cap.
    pub fn objective(
        &self,
        mats: &ReservoirMatrices,
        base: &EsnHyperparams,
        schedule: &FoldSchedule,
        p: Point,
    ) -> (f64, usize, bool) {
        let ctx = ObjectiveContext {
            u: self.dataset.u.full_view(),
            mats,
            base_hp: base,
            schedule,
            knowledge: self.knowledge(),
        };
        match evaluate_objective(&ctx, p[0], p[1]) {
            Ok(o) if o.value.is_finite() => (o.value, o.ridge_solves, false),
            Ok(o) => (LOG_MSE_CAP, o.ridge_solves, true),
            Err(_) => (LOG_MSE_CAP, 0, true),
        }
    }

    /// Retrains the readout at `p` on every target of the train/validation
    /// span after the training washout and scores the test suite.
    pub fn retrain_and_test(
        &self,
        mats: &ReservoirMatrices,
        base: &EsnHyperparams,
        p: Point,
    ) -> Result<Vec<TestPoint>, HarnessError> {
        let hp = base.with_point(p[0], p[1]);
        let w_tr = self.dataset.lt_steps(self.geometry.train_washout_lt);
        let train = w_tr..self.dataset.trainval_steps;
        let w_out = fit_readout(mats, &hp, self.dataset.u.full_view(), std::slice::from_ref(&train), self.knowledge())?;
        Ok(metrics::evaluate_test_suite(mats, &hp, &w_out, &self.dataset, &self.suite, self.knowledge())?)
    }
}

/// Test aggregates of one network: geometric-mean MSE, mean PH and the
/// number of censored horizons.
pub fn summarize_test(points: &[TestPoint]) -> (f64, Option<f64>, usize) {
    let mses: Vec<f64> = points.iter().map(|p| p.mse).collect();
    let mse = metrics::geometric_mean(&mses).unwrap_or(f64::MAX).min(f64::MAX);
    let phs: Vec<f64> = points.iter().filter_map(|p| p.ph.map(|h| h.lt)).collect();
    let ph = if phs.is_empty() { None } else { metrics::mean(&phs).ok() };
    let censored = points.iter().filter(|p| p.ph.is_some_and(|h| h.censored)).count();
    (mse, ph, censored)
}

/// BO seed of a (network, strategy) pair.
pub fn bayes_seed(network_seed: u64, strategy: StrategyKind) -> u64 {
    let index = StrategyKind::ALL.iter().position(|k| *k == strategy).expect("known strategy");
    seed::derive(network_seed, seed::stream::BAYES, index as u64)
}

fn run_one(
    prep: &Prepared,
    network: usize,
    mats: &ReservoirMatrices,
    base: &EsnHyperparams,
    strategy: StrategyKind,
    optimizer: Optimizer,
) -> Result<NetworkRun, HarnessError> {
    let schedule = prep.schedule(strategy).expect("schedule prepared");
    let space = prep.config.space.space()?;
    let mut evaluations = 0;
    let mut failed = 0;
    let mut solves = 0;
    let objective = |p: Point| {
        let (v, s, f) = prep.objective(mats, base, schedule, p);
        evaluations += 1;
        solves += s;
        failed += usize::from(f);
        Ok::<f64, Infallible>(v)
    };
    let t0 = Instant::now();
    let (best_point, validation, search) = match optimizer {
        Optimizer::Grid => {
            let r = grid_search(objective, &space, prep.config.grid).map_err(|e| HarnessError::Config(e.to_string()))?;
            (r.best_point, r.best_value, SearchTrace::Grid { table: r.table })
        }
        Optimizer::Bayes => {
            let r = bayesian_optimize(objective, &space, &prep.config.bo, bayes_seed(base.seed, strategy))?;
            (
                r.best_point,
                r.best_value,
                SearchTrace::Bayes {
                    trace: r.trace,
                    final_gains: r.final_gains,
                },
            )
        }
    };
    let optimize_seconds = t0.elapsed().as_secs_f64();
    let t1 = Instant::now();
    let mut test = prep.retrain_and_test(mats, base, best_point)?;
    let test_seconds = t1.elapsed().as_secs_f64();
    // JSON has no infinity; a diverged forecast is stored as f64::MAX
    for t in &mut test {
        t.mse = t.mse.min(f64::MAX);
    }
    let (test_mse, test_ph, ph_censored) = summarize_test(&test);
    Ok(NetworkRun {
        network,
        seed: base.seed,
        strategy,
        optimizer,
        best_point,
        validation,
        evaluations,
        failed_evaluations: failed,
        ridge_solves: solves,
        folds: schedule.k(),
        optimize_seconds,
        test_seconds,
        test,
        test_mse,
        test_ph,
        ph_censored,
        search,
    })
}

fn run_network(prep: &Prepared, network: usize) -> (Vec<NetworkRun>, Vec<NetworkFailure>) {
    let seed = prep.network_seed(network);
    let fail = |strategy, optimizer, e: HarnessError| NetworkFailure {
        network,
        seed,
        strategy,
        optimizer,
        error: e.to_string(),
    };
    let (base, mats) = match prep.matrices(network) {
        Ok(m) => m,
        Err(e) => return (Vec::new(), vec![fail(None, None, e)]),
    };
    let mut runs = Vec::new();
    let mut failures = Vec::new();
    for &strategy in &prep.config.strategies {
        for &optimizer in &prep.config.optimizers {
            match run_one(prep, network, &mats, &base, strategy, optimizer) {
                Ok(r) => runs.push(r),
                Err(e) => failures.push(fail(Some(strategy), Some(optimizer), e)),
            }
        }
    }
    log::debug!("network {network} done");
    (runs, failures)
}

/// Pool of `workers` threads (0: every core).
pub fn thread_pool(workers: usize) -> Result<rayon::ThreadPool, HarnessError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| HarnessError::Config(e.to_string()))
}

/// Loads the dataset of `config`, through the cache when a cache directory
/// is set in the config or in [`CACHE_ENV`].
pub fn load_dataset(config: &ExperimentConfig) -> Result<TimeSeriesDataset, HarnessError> {
    let dir = config
        .cache_dir
        .clone()
        .or_else(|| std::env::var_os(CACHE_ENV).map(Into::into));
    Ok(match dir {
        Some(d) => DatasetCache::new(d).load_or_make(config.dataset, config.dataset_seed)?,
        None => esnlab_core::dynamics::make_dataset(config.dataset, config.dataset_seed)?,
    })
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentRecord, HarnessError> {
    let dataset = load_dataset(config)?;
    run_experiment_on(config, dataset)
}

/// Runs the ensemble on a given dataset. Networks are processed in
/// parallel and merged in network order.
pub fn run_experiment_on(config: &ExperimentConfig, dataset: TimeSeriesDataset) -> Result<ExperimentRecord, HarnessError> {
    let prep = Prepared::new(config, dataset)?;
    let t0 = Instant::now();
    let per_network: Vec<(Vec<NetworkRun>, Vec<NetworkFailure>)> = thread_pool(config.workers)?.install(|| {
        (0..config.n_ensemble)
            .into_par_iter()
            .map(|n| run_network(&prep, n))
            .collect()
    });
    let wall_seconds = t0.elapsed().as_secs_f64();
    let mut runs = Vec::new();
    let mut failures = Vec::new();
    for (r, f) in per_network {
        runs.extend(r);
        failures.extend(f);
    }
    let spearman = spearman_table(config, &runs);
    let mse_ph_spearman = mse_ph_coupling(&runs);
    let cost = cost_table(config, &prep, &runs);
    Ok(ExperimentRecord {
        config: config.clone(),
        config_hash: config.hash(),
        dataset: prep.dataset.name.clone(),
        runs,
        failures,
        spearman,
        mse_ph_spearman,
        cost,
        wall_seconds,
    })
}

fn finite_pairs<'a>(runs: impl Iterator<Item = &'a NetworkRun>) -> (Vec<f64>, Vec<f64>) {
    runs.filter(|r| r.validation.is_finite())
        .map(|r| (r.validation, r.test_mse.max(metrics::MSE_FLOOR).log10()))
        .unzip()
}

pub fn spearman_table(config: &ExperimentConfig, runs: &[NetworkRun]) -> Vec<SpearmanRow> {
    config
        .strategies
        .iter()
        .map(|&strategy| {
            let (x, y) = finite_pairs(runs.iter().filter(|r| r.strategy == strategy));
            let per_optimizer = config
                .optimizers
                .iter()
                .map(|&o| {
                    let (a, b) = finite_pairs(runs.iter().filter(|r| r.strategy == strategy && r.optimizer == o));
                    (o, metrics::spearman(&a, &b).ok())
                })
                .collect();
            SpearmanRow {
                strategy,
                pooled: metrics::spearman(&x, &y).ok(),
                per_optimizer,
                samples: x.len(),
            }
        })
        .collect()
}

pub fn mse_ph_coupling(runs: &[NetworkRun]) -> Option<f64> {
    let (m, p): (Vec<f64>, Vec<f64>) = runs
        .iter()
        .filter_map(|r| r.test_ph.map(|ph| (r.test_mse.max(metrics::MSE_FLOOR).log10(), ph)))
        .unzip();
    metrics::spearman(&m, &p).ok()
}

fn cost_table(config: &ExperimentConfig, prep: &Prepared, runs: &[NetworkRun]) -> Vec<CostRow> {
    let mut rows = Vec::new();
    for &strategy in &config.strategies {
        for &optimizer in &config.optimizers {
            let sel: Vec<&NetworkRun> = runs
                .iter()
                .filter(|r| r.strategy == strategy && r.optimizer == optimizer)
                .collect();
            let evaluations: usize = sel.iter().map(|r| r.evaluations).sum();
            let ridge_solves: usize = sel.iter().map(|r| r.ridge_solves).sum();
            rows.push(CostRow {
                strategy,
                optimizer,
                folds: prep.schedule(strategy).map_or(0, |s| s.k()),
                evaluations,
                ridge_solves,
                ridge_solves_per_evaluation: if evaluations > 0 {
                    ridge_solves as f64 / evaluations as f64
                } else {
                    0.0
                },
                optimize_seconds: sel.iter().map(|r| r.optimize_seconds).sum(),
            });
        }
    }
    rows
}
