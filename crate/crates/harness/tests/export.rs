mod common;

use common::{lorenz, tiny};
use esnlab::config::Optimizer;
use esnlab::experiment::{run_experiment_on, ExperimentRecord};
use esnlab::export::{append_record, export, read_records, ExportFormats, SURFACE_SIDE};
use esnlab_core::validation::StrategyKind;
use std::fs;

fn all_formats() -> ExportFormats {
    ExportFormats {
        csv: true,
        json: true,
        surfaces: true,
    }
}

#[test]
fn empty_record_gives_header_only_tables() {
    let cfg = tiny(1, &[StrategyKind::Ssv], &[Optimizer::Grid]);
    let rec = ExperimentRecord {
        config_hash: cfg.hash(),
        config: cfg,
        dataset: "lorenz_short".into(),
        runs: vec![],
        failures: vec![],
        spearman: vec![],
        mse_ph_spearman: None,
        cost: vec![],
        wall_seconds: 0.0,
    };
    let dir = tempfile::tempdir().unwrap();
    let paths = export(&rec, dir.path(), all_formats()).unwrap();
    for p in paths.iter().filter(|p| p.extension().is_some_and(|e| e == "csv")) {
        let text = fs::read_to_string(p).unwrap();
        assert_eq!(text.lines().count(), 1, "{}", p.display());
    }
    assert!(fs::read_to_string(dir.path().join("runs.csv")).unwrap().starts_with("network,seed,strategy"));
}

#[test]
fn export_is_idempotent_and_surfaces_have_900_rows_per_set() {
    let cfg = tiny(2, &[StrategyKind::Ssv, StrategyKind::RvC], &[Optimizer::Grid, Optimizer::Bayes]);
    let rec = run_experiment_on(&cfg, lorenz()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let first = export(&rec, dir.path(), all_formats()).unwrap();
    let bytes: Vec<Vec<u8>> = first.iter().map(|p| fs::read(p).unwrap()).collect();
    let second = export(&rec, dir.path(), all_formats()).unwrap();
    assert_eq!(first, second);
    for (p, b) in second.iter().zip(&bytes) {
        assert_eq!(&fs::read(p).unwrap(), b, "{}", p.display());
    }
    let mut reader = csv::Reader::from_path(dir.path().join("surfaces.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), rec.runs.len() * SURFACE_SIDE * SURFACE_SIDE);
    for r in &rec.runs {
        let n = rows
            .iter()
            .filter(|row| {
                row[0] == r.network.to_string() && row[1] == *r.strategy.label() && row[2] == *r.optimizer.label()
            })
            .count();
        assert_eq!(n, 900);
    }
    let runs = fs::read_to_string(dir.path().join("runs.csv")).unwrap();
    assert_eq!(runs.lines().count(), 1 + rec.runs.len());
}

#[test]
fn records_append_and_read_back() {
    let cfg = tiny(1, &[StrategyKind::Ssv], &[Optimizer::Bayes]);
    let rec = run_experiment_on(&cfg, lorenz()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("nested/records.jsonl");
    append_record(&path, &rec).unwrap();
    append_record(&path, &rec).unwrap();
    let back = read_records(&path).unwrap();
    assert_eq!(back, vec![rec.clone(), rec]);
    fs::write(&path, "{not json}\n").unwrap();
    let err = read_records(&path).unwrap_err().to_string();
    assert!(err.contains("records.jsonl") && err.contains("line 1"), "{err}");
}
