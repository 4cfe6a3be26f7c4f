//! Experiment configuration.
//!
//! A TOML file only needs the keys it changes: it is overlaid on the
//! defaults of its `dataset`.

use crate::HarnessError;
use esnlab_core::dynamics::{DatasetVariant, SystemKind};
use esnlab_core::hpo::{BoConfig, Dimension, SearchSpace};
use esnlab_core::reservoir::EsnHyperparams;
use esnlab_core::validation::{StrategyKind, ValidationGeometry};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Architecture {
    ModelFree,
    PodInformed,
    FeInformed,
}

impl Architecture {
    pub const ALL: [Architecture; 3] = [Architecture::ModelFree, Architecture::PodInformed, Architecture::FeInformed];

    pub fn as_str(&self) -> &'static str {
        match self {
            Architecture::ModelFree => "model_free",
            Architecture::PodInformed => "pod_informed",
            Architecture::FeInformed => "fe_informed",
        }
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Architecture {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Architecture::ALL
            .iter()
            .find(|a| a.as_str() == s)
            .copied()
            .ok_or_else(|| format!("unknown architecture `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Optimizer {
    #[serde(rename = "GS")]
    Grid,
    #[serde(rename = "BO")]
    Bayes,
}

impl Optimizer {
    pub fn label(&self) -> &'static str {
        match self {
            Optimizer::Grid => "GS",
            Optimizer::Bayes => "BO",
        }
    }
}

impl fmt::Display for Optimizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Optimizer {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "GS" => Ok(Optimizer::Grid),
            "BO" => Ok(Optimizer::Bayes),
            _ => Err(format!("unknown optimizer `{s}`")),
        }
    }
}

/// Hyperparameters held fixed during the search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReservoirConfig {
    pub n_r: usize,
    pub sparseness: f64,
    pub beta_tik: f64,
    pub b_in: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceConfig {
    pub sigma_in: Dimension,
    pub rho: Dimension,
}

impl SpaceConfig {
    pub fn space(&self) -> Result<SearchSpace, HarnessError> {
        SearchSpace::new([self.sigma_in, self.rho]).map_err(|e| HarnessError::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestConfig {
    /// Use only the first `count` starting points of the dataset layout.
    pub count: Option<usize>,
    pub k_threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub dataset: DatasetVariant,
    pub dataset_seed: u64,
    pub architecture: Architecture,
    pub strategies: Vec<StrategyKind>,
    pub optimizers: Vec<Optimizer>,
    pub n_ensemble: usize,
    pub master_seed: u64,
    /// Every network uses the matrices of network 0.
    pub shared_network: bool,
    pub reservoir: ReservoirConfig,
    pub space: SpaceConfig,
    /// Grid search lattice points per dimension.
    pub grid: [usize; 2],
    pub bo: BoConfig,
    pub test: TestConfig,
    /// Retained POD modes of the POD-informed architecture.
    pub n_pod: usize,
    /// Worker threads; 0 uses every core. Not part of the config hash.
    pub workers: usize,
    /// Output directory. Not part of the config hash.
    pub out_dir: Option<PathBuf>,
    /// Dataset cache directory. Not part of the config hash.
    pub cache_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Defaults of a dataset: 50 model-free networks, every strategy defined
    /// on it, both optimizers.
    pub fn for_variant(dataset: DatasetVariant) -> Self {
        let kuznetsov = dataset.system_kind() == SystemKind::Kuznetsov;
        let strategies = StrategyKind::ALL
            .into_iter()
            .filter(|k| *k != StrategyKind::WfvCStar || dataset == DatasetVariant::LorenzLong)
            .collect();
        Self {
            name: dataset.as_str().to_string(),
            dataset,
            dataset_seed: 0,
            architecture: Architecture::ModelFree,
            strategies,
            optimizers: vec![Optimizer::Grid, Optimizer::Bayes],
            n_ensemble: 50,
            master_seed: 1,
            shared_network: false,
            reservoir: ReservoirConfig {
                n_r: 100,
                sparseness: 0.97,
                beta_tik: 1e-11,
                b_in: if kuznetsov { 0.1 } else { 1.0 },
            },
            space: SpaceConfig {
                sigma_in: Dimension::linear(0.5, 5.0),
                rho: if kuznetsov {
                    Dimension::log10(0.01, 1.0)
                } else {
                    Dimension::linear(0.1, 1.0)
                },
            },
            grid: [7, 7],
            bo: BoConfig::default(),
            test: TestConfig {
                count: None,
                k_threshold: 0.2,
            },
            n_pod: 2,
            workers: 0,
            out_dir: None,
            cache_dir: None,
        }
    }

    /// Parses TOML text over the defaults of its `dataset` key
    /// (`lorenz_short` when absent).
    pub fn from_toml_str(text: &str) -> Result<Self, HarnessError> {
        let user: toml::Table = text.parse().map_err(|e: toml::de::Error| HarnessError::Config(e.to_string()))?;
        let dataset = match user.get("dataset") {
            Some(v) => v
                .as_str()
                .ok_or_else(|| HarnessError::Config("`dataset` must be a string".into()))?
                .parse::<DatasetVariant>()
                .map_err(HarnessError::Config)?,
            None => DatasetVariant::LorenzShort,
        };
        let base = match toml::Value::try_from(Self::for_variant(dataset)) {
            Ok(toml::Value::Table(t)) => t,
            _ => unreachable!("config serializes to a table"),
        };
        let merged = toml::Value::Table(overlay(base, user));
        let cfg: Self = merged.try_into().map_err(|e: toml::de::Error| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.n_ensemble == 0 {
            return bad("n_ensemble must be at least 1".into());
        }
        if self.strategies.is_empty() || self.optimizers.is_empty() {
            return bad("at least one strategy and one optimizer are required".into());
        }
        if self.grid.contains(&0) {
            return bad("grid shape must be positive".into());
        }
        if self.bo.n_start.contains(&0) || self.bo.lattice < 2 {
            return bad("bo.n_start must be positive and bo.lattice at least 2".into());
        }
        let system = self.dataset.system_kind();
        match (self.architecture, system) {
            (Architecture::PodInformed, SystemKind::Kuznetsov) => {
                return bad("pod_informed requires a Lorenz dataset".into())
            }
            (Architecture::FeInformed, SystemKind::Lorenz) => return bad("fe_informed requires a Kuznetsov dataset".into()),
            _ => {}
        }
        if self.architecture == Architecture::PodInformed && !(1..=3).contains(&self.n_pod) {
            return bad(format!("n_pod must lie in 1..=3, got {}", self.n_pod));
        }
        let geometry = ValidationGeometry::for_variant(self.dataset);
        for s in &self.strategies {
            if *s == StrategyKind::WfvCStar && geometry.wfv_star_train_lt.is_none() {
                return bad(format!("{s} is not defined for {}", self.dataset));
            }
        }
        if self.test.k_threshold.is_nan() || self.test.k_threshold <= 0.0 || self.test.count == Some(0) {
            return bad("test.k_threshold must be positive and test.count at least 1".into());
        }
        self.space.space()?;
        self.base_hp(0).validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        Ok(())
    }

    /// Fixed hyperparameters of a network; `σ_in` and `ρ` are placeholders
    /// until a point is chosen.
    pub fn base_hp(&self, seed: u64) -> EsnHyperparams {
        EsnHyperparams {
            sigma_in: self.space.sigma_in.hi,
            rho: self.space.rho.hi,
            beta_tik: self.reservoir.beta_tik,
            b_in: self.reservoir.b_in,
            n_r: self.reservoir.n_r,
            sparseness: self.reservoir.sparseness,
            seed,
        }
    }

    /// SHA-256 of the canonical JSON of every field that affects results.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.workers = 0;
        c.out_dir = None;
        c.cache_dir = None;
        let json = serde_json::to_vec(&c).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }
}

/// Recursively replaces entries of `base` by those of `user`.
fn overlay(mut base: toml::Table, user: toml::Table) -> toml::Table {
    for (k, v) in user {
        match (base.remove(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(u)) => {
                base.insert(k, toml::Value::Table(overlay(b, u)));
            }
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
    base
}
