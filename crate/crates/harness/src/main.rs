use clap::{Args, Parser, Subcommand};
use esnlab::config::{Architecture, ExperimentConfig, Optimizer};
use esnlab::experiment::{load_dataset, run_experiment_on, CACHE_ENV};
use esnlab::export::{self, ExportFormats, RECORDS_FILE};
use esnlab::study::{run_convergence_sweep, run_fixed_hp_study, SweepAxis};
use esnlab::HarnessError;
use esnlab_core::dynamics::{DatasetCache, DatasetVariant};
use esnlab_core::validation::StrategyKind;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "esnlab", version, about = "Echo state network validation and tuning lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a dataset and write it as CSV (and to the cache when set).
    Generate {
        #[arg(long)]
        dataset: DatasetVariant,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, env = CACHE_ENV)]
        cache_dir: Option<PathBuf>,
    },
    /// Run an ensemble experiment, append its record and export tables.
    Run {
        #[command(flatten)]
        common: Common,
        /// Also export 30 x 30 posterior-mean surfaces.
        #[arg(long)]
        surfaces: bool,
    },
    /// Run an appendix study.
    Study {
        #[command(subcommand)]
        study: Study,
    },
    /// Export the tables of a recorded experiment.
    Export {
        /// Record log written by `run`.
        #[arg(long)]
        records: PathBuf,
        /// Config hash of the record; the last record when absent.
        #[arg(long)]
        hash: Option<String>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        surfaces: bool,
    },
}

#[derive(Subcommand)]
enum Study {
    /// Independent versus fixed hyperparameters.
    FixedHp {
        #[command(flatten)]
        common: Common,
    },
    /// Percentiles against ensemble size or number of test starts.
    Convergence {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "n_ensemble")]
        axis: SweepAxis,
        /// Largest size; every available network or start when absent.
        #[arg(long)]
        max: Option<usize>,
    },
}

#[derive(Args)]
struct Common {
    /// TOML config; unspecified keys take the dataset defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed of the network ensemble.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Restrict to these strategies (repeatable).
    #[arg(long)]
    strategy: Vec<StrategyKind>,
    /// Restrict to these optimizers (repeatable).
    #[arg(long)]
    optimizer: Vec<Optimizer>,
    #[arg(long)]
    arch: Option<Architecture>,
    #[arg(long, env = CACHE_ENV)]
    cache_dir: Option<PathBuf>,
}

impl Common {
    fn config(&self) -> Result<ExperimentConfig, HarnessError> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::for_variant(DatasetVariant::LorenzShort),
        };
        if let Some(s) = self.seed {
            cfg.master_seed = s;
        }
        if let Some(w) = self.workers {
            cfg.workers = w;
        }
        if let Some(o) = &self.out {
            cfg.out_dir = Some(o.clone());
        }
        if !self.strategy.is_empty() {
            cfg.strategies = self.strategy.clone();
        }
        if !self.optimizer.is_empty() {
            cfg.optimizers = self.optimizer.clone();
        }
        if let Some(a) = self.arch {
            cfg.architecture = a;
        }
        if let Some(c) = &self.cache_dir {
            cfg.cache_dir = Some(c.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn out_dir(cfg: &ExperimentConfig) -> PathBuf {
    cfg.out_dir.clone().unwrap_or_else(|| PathBuf::from("out").join(&cfg.name))
}

fn print_paths(paths: &[PathBuf]) {
    for p in paths {
        println!("{}", p.display());
    }
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Generate {
            dataset,
            seed,
            out,
            cache_dir,
        } => {
            let ds = match cache_dir {
                Some(d) => DatasetCache::new(d).load_or_make(dataset, seed)?,
                None => esnlab_core::dynamics::make_dataset(dataset, seed)?,
            };
            ds.write_csv(&out)?;
            println!("{}", out.display());
        }
        Command::Run { common, surfaces } => {
            let cfg = common.config()?;
            let dir = out_dir(&cfg);
            let record = run_experiment_on(&cfg, load_dataset(&cfg)?)?;
            export::append_record(&dir.join(RECORDS_FILE), &record)?;
            let formats = ExportFormats {
                surfaces,
                ..ExportFormats::default()
            };
            print_paths(&export::export(&record, &dir, formats)?);
            for f in &record.failures {
                log::warn!("network {} failed: {}", f.network, f.error);
            }
        }
        Command::Study { study } => match study {
            Study::FixedHp { common } => {
                let cfg = common.config()?;
                let dataset = load_dataset(&cfg)?;
                let dir = out_dir(&cfg);
                for &strategy in &cfg.strategies {
                    for &optimizer in &cfg.optimizers {
                        let rec = run_fixed_hp_study(&cfg, dataset.clone(), strategy, optimizer, None)?;
                        let sub = dir.join(format!("fixed_hp_{strategy}_{optimizer}"));
                        print_paths(&export::export_fixed_hp(&rec, &sub)?);
                    }
                }
            }
            Study::Convergence { common, axis, max } => {
                let cfg = common.config()?;
                let dir = out_dir(&cfg);
                let record = run_experiment_on(&cfg, load_dataset(&cfg)?)?;
                export::append_record(&dir.join(RECORDS_FILE), &record)?;
                for &strategy in &cfg.strategies {
                    for &optimizer in &cfg.optimizers {
                        let runs = record.select(strategy, optimizer);
                        let available = match axis {
                            SweepAxis::NEnsemble => runs.len(),
                            SweepAxis::NTestStarts => runs.iter().map(|r| r.test.len()).min().unwrap_or(0),
                        };
                        let sweep = run_convergence_sweep(&record, strategy, optimizer, axis, max.unwrap_or(available))?;
                        let sub = dir.join(format!("convergence_{strategy}_{optimizer}"));
                        println!("{}", export::export_sweep(&sweep, &sub)?.display());
                    }
                }
            }
        },
        Command::Export {
            records,
            hash,
            out,
            surfaces,
        } => {
            let all = export::read_records(&records)?;
            let record = match &hash {
                Some(h) => all.iter().rev().find(|r| r.config_hash.starts_with(h.as_str())),
                None => all.last(),
            }
            .ok_or_else(|| HarnessError::Config(format!("no matching record in {}", records.display())))?;
            let formats = ExportFormats {
                surfaces,
                ..ExportFormats::default()
            };
            print_paths(&export::export(record, &out, formats)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let summary = serde_json::json!({
                "status": "error",
                "kind": e.kind(),
                "message": e.to_string(),
            });
            eprintln!("{summary}");
            ExitCode::FAILURE
        }
    }
}
