//! Result tables, JSON summaries, plot data and the append-only record log.

use crate::config::Optimizer;
use crate::experiment::{ExperimentRecord, NetworkRun};
use crate::study::{ConvergenceSweep, FixedHpRecord};
use crate::{io_err, HarnessError};
use esnlab_core::hpo::{gp_fit, unit_ticks, SearchSpace};
use esnlab_core::metrics::{self, Quartiles};
use esnlab_core::seed;
use esnlab_core::validation::StrategyKind;
use serde::Serialize;
use std::fs::{self, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

/// Lattice points per dimension of the exported posterior-mean surfaces.
pub const SURFACE_SIDE: usize = 30;

pub const RECORDS_FILE: &str = "records.jsonl";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExportFormats {
    pub csv: bool,
    pub json: bool,
    pub surfaces: bool,
}

impl Default for ExportFormats {
    fn default() -> Self {
        Self {
            csv: true,
            json: true,
            surfaces: false,
        }
    }
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>, HarnessError> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    Ok(csv::WriterBuilder::new().has_headers(false).from_writer(file))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> HarnessError + '_ {
    move |e| HarnessError::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

/// Writes a CSV with an explicit header, so empty tables still get one.
fn write_table<R: Serialize>(path: &Path, header: &[&str], rows: &[R]) -> Result<(), HarnessError> {
    let mut w = csv_writer(path)?;
    w.write_record(header).map_err(csv_err(path))?;
    for r in rows {
        w.serialize(r).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), HarnessError> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

fn opt_str(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

const RUN_HEADER: [&str; 16] = [
    "network",
    "seed",
    "strategy",
    "optimizer",
    "sigma_in",
    "rho",
    "validation_log10_mse",
    "test_mse",
    "test_ph_lt",
    "ph_censored",
    "evaluations",
    "failed_evaluations",
    "ridge_solves",
    "folds",
    "optimize_seconds",
    "test_seconds",
];

type RunRow = (
    usize,
    u64,
    StrategyKind,
    Optimizer,
    f64,
    f64,
    f64,
    f64,
    String,
    usize,
    usize,
    usize,
    usize,
    usize,
    f64,
    f64,
);

fn run_row(r: &NetworkRun) -> RunRow {
    (
        r.network,
        r.seed,
        r.strategy,
        r.optimizer,
        r.best_point[0],
        r.best_point[1],
        r.validation,
        r.test_mse,
        opt_str(r.test_ph),
        r.ph_censored,
        r.evaluations,
        r.failed_evaluations,
        r.ridge_solves,
        r.folds,
        r.optimize_seconds,
        r.test_seconds,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SetSummary {
    pub strategy: StrategyKind,
    pub optimizer: Optimizer,
    pub networks: usize,
    pub validation_mse: Option<Quartiles>,
    pub test_mse: Option<Quartiles>,
    pub test_ph: Option<Quartiles>,
}

/// Quartiles per (strategy, optimizer). Validation quartiles are in MSE
/// units.
pub fn set_summaries(record: &ExperimentRecord) -> Vec<SetSummary> {
    let mut out = Vec::new();
    for &strategy in &record.config.strategies {
        for &optimizer in &record.config.optimizers {
            let runs = record.select(strategy, optimizer);
            let val: Vec<f64> = runs.iter().map(|r| 10f64.powf(r.validation)).collect();
            let mse: Vec<f64> = runs.iter().map(|r| r.test_mse).collect();
            let ph: Vec<f64> = runs.iter().filter_map(|r| r.test_ph).collect();
            out.push(SetSummary {
                strategy,
                optimizer,
                networks: runs.len(),
                validation_mse: Quartiles::of(&val).ok(),
                test_mse: Quartiles::of(&mse).ok(),
                test_ph: Quartiles::of(&ph).ok(),
            });
        }
    }
    out
}

#[derive(Serialize)]
struct Summary<'a> {
    name: &'a str,
    config_hash: &'a str,
    dataset: &'a str,
    networks: usize,
    runs: usize,
    failures: usize,
    sets: Vec<SetSummary>,
    spearman: &'a [crate::experiment::SpearmanRow],
    mse_ph_spearman: Option<f64>,
    cost: &'a [crate::experiment::CostRow],
    wall_seconds: f64,
}

/// Writes the tables of `record` into `dir` and returns the written paths.
/// Exporting the same record twice yields byte-identical files.
pub fn export(record: &ExperimentRecord, dir: &Path, formats: ExportFormats) -> Result<Vec<PathBuf>, HarnessError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut written = Vec::new();
    if formats.csv {
        let path = dir.join("runs.csv");
        let rows: Vec<RunRow> = record.runs.iter().map(run_row).collect();
        write_table(&path, &RUN_HEADER, &rows)?;
        written.push(path);

        let path = dir.join("test_points.csv");
        let rows: Vec<(usize, StrategyKind, Optimizer, usize, f64, String, String)> = record
            .runs
            .iter()
            .flat_map(|r| {
                r.test.iter().map(move |t| {
                    (
                        r.network,
                        r.strategy,
                        r.optimizer,
                        t.start,
                        t.mse,
                        opt_str(t.ph.map(|h| h.lt)),
                        t.ph.map(|h| h.censored.to_string()).unwrap_or_default(),
                    )
                })
            })
            .collect();
        write_table(
            &path,
            &["network", "strategy", "optimizer", "start", "mse", "ph_lt", "ph_censored"],
            &rows,
        )?;
        written.push(path);

        let path = dir.join("spearman.csv");
        let rows: Vec<(StrategyKind, String, String, String, usize)> = record
            .spearman
            .iter()
            .map(|s| {
                let per = |o| opt_str(s.per_optimizer.get(&o).copied().flatten());
                (s.strategy, opt_str(s.pooled), per(Optimizer::Grid), per(Optimizer::Bayes), s.samples)
            })
            .collect();
        write_table(&path, &["strategy", "pooled", "GS", "BO", "samples"], &rows)?;
        written.push(path);

        let path = dir.join("cost.csv");
        let rows: Vec<_> = record
            .cost
            .iter()
            .map(|c| {
                (
                    c.strategy,
                    c.optimizer,
                    c.folds,
                    c.evaluations,
                    c.ridge_solves,
                    c.ridge_solves_per_evaluation,
                    c.optimize_seconds,
                )
            })
            .collect();
        write_table(
            &path,
            &[
                "strategy",
                "optimizer",
                "folds",
                "evaluations",
                "ridge_solves",
                "ridge_solves_per_evaluation",
                "optimize_seconds",
            ],
            &rows,
        )?;
        written.push(path);
    }
    if formats.json {
        let path = dir.join("summary.json");
        write_json(
            &path,
            &Summary {
                name: &record.config.name,
                config_hash: &record.config_hash,
                dataset: &record.dataset,
                networks: record.config.n_ensemble,
                runs: record.runs.len(),
                failures: record.failures.len(),
                sets: set_summaries(record),
                spearman: &record.spearman,
                mse_ph_spearman: record.mse_ph_spearman,
                cost: &record.cost,
                wall_seconds: record.wall_seconds,
            },
        )?;
        written.push(path);
    }
    if formats.surfaces {
        let path = dir.join("surfaces.csv");
        let space = record.config.space.space()?;
        let mut rows = Vec::new();
        for r in &record.runs {
            rows.extend(surface_rows(r, &space)?);
        }
        write_table(
            &path,
            &["network", "strategy", "optimizer", "i", "j", "sigma_in", "rho", "mean_log10_mse"],
            &rows,
        )?;
        written.push(path);
    }
    Ok(written)
}

pub type SurfaceRow = (usize, StrategyKind, Optimizer, usize, usize, f64, f64, f64);

/// GP posterior mean of the validation objective of one run on a
/// 30 × 30 lattice of the search space.
pub fn surface_rows(run: &NetworkRun, space: &SearchSpace) -> Result<Vec<SurfaceRow>, HarnessError> {
    let pts = run.search.points();
    let x: Vec<_> = pts.iter().map(|(p, _)| space.to_unit(*p)).collect();
    let y: Vec<f64> = pts.iter().map(|(_, v)| *v).collect();
    let gp = gp_fit(&x, &y, seed::derive(run.seed, seed::stream::GP_RESTARTS, u64::MAX))?;
    let ticks = unit_ticks(SURFACE_SIDE);
    let mut rows = Vec::with_capacity(SURFACE_SIDE * SURFACE_SIDE);
    for (i, &a) in ticks.iter().enumerate() {
        for (j, &b) in ticks.iter().enumerate() {
            let p = space.from_unit([a, b]);
            rows.push((run.network, run.strategy, run.optimizer, i, j, p[0], p[1], gp.mean(&[a, b])));
        }
    }
    Ok(rows)
}

/// Writes a fixed-hp study as JSON plus a per-network CSV.
pub fn export_fixed_hp(study: &FixedHpRecord, dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let json = dir.join("fixed_hp.json");
    write_json(&json, study)?;
    let csv = dir.join("fixed_hp.csv");
    let rows: Vec<_> = study
        .modes
        .iter()
        .flat_map(|m| {
            (0..m.points.len()).map(move |n| {
                (
                    m.mode.as_str(),
                    n,
                    m.points[n][0],
                    m.points[n][1],
                    m.test_mse[n],
                    opt_str(m.test_ph[n]),
                )
            })
        })
        .collect();
    write_table(&csv, &["mode", "network", "sigma_in", "rho", "test_mse", "test_ph_lt"], &rows)?;
    Ok(vec![json, csv])
}

/// Writes a convergence sweep as a percentile-versus-size CSV.
pub fn export_sweep(sweep: &ConvergenceSweep, dir: &Path) -> Result<PathBuf, HarnessError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let name = match sweep.axis {
        crate::study::SweepAxis::NEnsemble => "sweep_n_ensemble.csv",
        crate::study::SweepAxis::NTestStarts => "sweep_n_test_starts.csv",
    };
    let path = dir.join(name);
    let rows: Vec<_> = sweep
        .rows
        .iter()
        .map(|r| {
            (
                r.size,
                r.mse.p25,
                r.mse.p50,
                r.mse.p75,
                opt_str(r.ph.map(|q| q.p25)),
                opt_str(r.ph.map(|q| q.p50)),
                opt_str(r.ph.map(|q| q.p75)),
            )
        })
        .collect();
    write_table(
        &path,
        &["size", "mse_p25", "mse_p50", "mse_p75", "ph_p25", "ph_p50", "ph_p75"],
        &rows,
    )?;
    Ok(path)
}

/// Appends `record` as one JSON line. Existing lines are never rewritten.
pub fn append_record(path: &Path, record: &ExperimentRecord) -> Result<(), HarnessError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    let mut file = OpenOptions::new().create(true).append(true).open(path).map_err(io_err(path))?;
    let mut line = serde_json::to_string(record).expect("serializable");
    line.push('\n');
    file.write_all(line.as_bytes()).map_err(io_err(path))
}

pub fn read_records(path: &Path) -> Result<Vec<ExperimentRecord>, HarnessError> {
    let file = fs::File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| HarnessError::Format {
            path: path.to_path_buf(),
            message: format!("line {}: {e}", i + 1),
        })?);
    }
    Ok(out)
}

/// Median test PH of a set of runs.
pub fn median_ph(runs: &[&NetworkRun]) -> Option<f64> {
    let ph: Vec<f64> = runs.iter().filter_map(|r| r.test_ph).collect();
    metrics::median(&ph).ok()
}
