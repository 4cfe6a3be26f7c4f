//! Lorenz and Kuznetsov systems, forward Euler integration and dataset
//! construction.
//!
//! Datasets are stored normalized by the maximum variation of the signal
//! (globally for Lorenz, component-wise for Kuznetsov). Time is tracked in
//! network steps; `steps_per_lt` converts Lyapunov times into steps.

use crate::seed;
use crate::series::Trajectory;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("state became non-finite at integrator step {step}")]
    NonFiniteState { step: usize },
    #[error("invalid trajectory config: {0}")]
    InvalidConfig(String),
    #[error("degenerate signal: component {component} has zero range")]
    DegenerateSignal { component: usize },
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("csv error on {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("cache format error on {path}: {message}")]
    Format { path: PathBuf, message: String },
}

/// A vector field `q̇ = f(q)`.
pub trait VectorField {
    fn dim(&self) -> usize;
    fn rhs(&self, q: &[f64], out: &mut [f64]);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SystemKind {
    Lorenz,
    Kuznetsov,
}

/// One of the two benchmark systems with its parameters.
///
/// Lorenz parameters are `[σ_L, β_L, ρ_L]`, Kuznetsov parameters
/// `[λ, ω₀, μ]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdeSystem {
    pub kind: SystemKind,
    pub params: [f64; 3],
}

impl OdeSystem {
    pub fn lorenz() -> Self {
        Self::lorenz_with(10.0, 8.0 / 3.0, 28.0)
    }

    pub fn lorenz_with(sigma: f64, beta: f64, rho: f64) -> Self {
        Self {
            kind: SystemKind::Lorenz,
            params: [sigma, beta, rho],
        }
    }

    /// Kuznetsov oscillator with `λ = 0`, `ω₀ = 2.7` and the given `μ`
    /// (0.9 quasiperiodic, 0.5 chaotic).
    pub fn kuznetsov(mu: f64) -> Self {
        Self::kuznetsov_with(0.0, 2.7, mu)
    }

    pub fn kuznetsov_with(lambda: f64, omega0: f64, mu: f64) -> Self {
        Self {
            kind: SystemKind::Kuznetsov,
            params: [lambda, omega0, mu],
        }
    }

    pub fn state_dim(&self) -> usize {
        3
    }
}

impl VectorField for OdeSystem {
    fn dim(&self) -> usize {
        3
    }

    fn rhs(&self, q: &[f64], out: &mut [f64]) {
        let (x, y, z) = (q[0], q[1], q[2]);
        match self.kind {
            SystemKind::Lorenz => {
                let [sigma, beta, rho] = self.params;
                out[0] = sigma * (y - x);
                out[1] = x * (rho - z) - y;
                out[2] = x * y - beta * z;
            }
            SystemKind::Kuznetsov => {
                let [lambda, omega0, mu] = self.params;
                let x2 = x * x;
                out[0] = y;
                out[1] = y * (lambda + z + x2 - 0.5 * x2 * x2) - omega0 * omega0 * x;
                out[2] = mu - x2;
            }
        }
    }
}

/// Evaluates `f(q)` for one of the benchmark systems.
pub fn ode_rhs(system: &OdeSystem, q: &[f64]) -> Vec<f64> {
    assert_eq!(q.len(), system.state_dim(), "state dimension mismatch");
    let mut out = vec![0.0; 3];
    system.rhs(q, &mut out);
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryConfig {
    pub dt_integrator: f64,
    /// Integrator steps per recorded (network) step.
    pub subsample: usize,
    pub n_network_steps: usize,
    pub initial_condition: Vec<f64>,
    /// Network steps discarded before recording starts.
    pub transient_steps: usize,
}

impl TrajectoryConfig {
    pub fn validate(&self, dim: usize) -> Result<(), DynamicsError> {
        if !(self.dt_integrator > 0.0 && self.dt_integrator.is_finite()) {
            return Err(DynamicsError::InvalidConfig(format!(
                "dt_integrator must be positive, got {}",
                self.dt_integrator
            )));
        }
        if self.subsample == 0 {
            return Err(DynamicsError::InvalidConfig("subsample must be >= 1".into()));
        }
        if self.initial_condition.len() != dim {
            return Err(DynamicsError::InvalidConfig(format!(
                "initial condition has {} components, system has {dim}",
                self.initial_condition.len()
            )));
        }
        Ok(())
    }
}

/// Integrates `q_{k+1} = q_k + dt f(q_k)`.
///
/// Row `k` of the output is the state after `(transient_steps + k) * subsample`
/// integrator steps, so row 0 is the initial condition when there is no
/// transient.
pub fn integrate_forward_euler<F: VectorField + ?Sized>(
    field: &F,
    cfg: &TrajectoryConfig,
) -> Result<Trajectory, DynamicsError> {
    let dim = field.dim();
    cfg.validate(dim)?;
    let mut q = cfg.initial_condition.clone();
    let mut dq = vec![0.0; dim];
    let mut step = 0usize;
    let dt = cfg.dt_integrator;

    let mut advance = |q: &mut Vec<f64>, dq: &mut Vec<f64>| -> Result<(), DynamicsError> {
        for _ in 0..cfg.subsample {
            field.rhs(q, dq);
            for (qi, di) in q.iter_mut().zip(dq.iter()) {
                *qi += dt * di;
            }
            step += 1;
            if q.iter().any(|v| !v.is_finite()) {
                return Err(DynamicsError::NonFiniteState { step });
            }
        }
        Ok(())
    };

    for _ in 0..cfg.transient_steps {
        advance(&mut q, &mut dq)?;
    }
    let mut out = Trajectory::with_capacity(dim, cfg.n_network_steps);
    for k in 0..cfg.n_network_steps {
        if k > 0 {
            advance(&mut q, &mut dq)?;
        }
        out.push_row(&q);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormMode {
    /// Every component divided by the largest component range.
    Global,
    /// Each component divided by its own range.
    Componentwise,
}

/// Offsets and scales mapping the physical signal onto the network frame:
/// `u = (q - offset) / scale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormRecord {
    pub mode: NormMode,
    pub offsets: Vec<f64>,
    pub scales: Vec<f64>,
}

impl NormRecord {
    pub fn identity(dim: usize) -> Self {
        Self {
            mode: NormMode::Componentwise,
            offsets: vec![0.0; dim],
            scales: vec![1.0; dim],
        }
    }

    /// Extracts the max-variation scales of `raw`.
    pub fn fit(raw: &Trajectory, mode: NormMode) -> Result<Self, DynamicsError> {
        if raw.len() < 2 {
            return Err(DynamicsError::InvalidDataset(
                "normalization needs at least two rows".into(),
            ));
        }
        let dim = raw.dim();
        let mut lo = vec![f64::INFINITY; dim];
        let mut hi = vec![f64::NEG_INFINITY; dim];
        for row in raw.rows() {
            for j in 0..dim {
                lo[j] = lo[j].min(row[j]);
                hi[j] = hi[j].max(row[j]);
            }
        }
        let ranges: Vec<f64> = lo.iter().zip(&hi).map(|(l, h)| h - l).collect();
        let scales = match mode {
            NormMode::Componentwise => {
                if let Some(j) = ranges.iter().position(|r| !(*r > 0.0)) {
                    return Err(DynamicsError::DegenerateSignal { component: j });
                }
                ranges
            }
            NormMode::Global => {
                let max = ranges.iter().cloned().fold(0.0, f64::max);
                if !(max > 0.0) {
                    return Err(DynamicsError::DegenerateSignal { component: 0 });
                }
                vec![max; dim]
            }
        };
        Ok(Self {
            mode,
            offsets: vec![0.0; dim],
            scales,
        })
    }

    pub fn normalize(&self, raw: &Trajectory) -> Trajectory {
        let mut out = raw.clone();
        for i in 0..out.len() {
            let row = out.row_mut(i);
            for j in 0..row.len() {
                row[j] = (row[j] - self.offsets[j]) / self.scales[j];
            }
        }
        out
    }

    pub fn denormalize(&self, u: &Trajectory) -> Trajectory {
        let mut out = u.clone();
        for i in 0..out.len() {
            let row = out.row_mut(i);
            for j in 0..row.len() {
                row[j] = row[j] * self.scales[j] + self.offsets[j];
            }
        }
        out
    }

    #[inline]
    pub fn to_physical(&self, u: &[f64], out: &mut [f64]) {
        for j in 0..u.len() {
            out[j] = u[j] * self.scales[j] + self.offsets[j];
        }
    }
}

/// Normalizes a raw trajectory by its maximum variation.
pub fn normalize_max_variation(
    raw: &Trajectory,
    mode: NormMode,
) -> Result<(Trajectory, NormRecord), DynamicsError> {
    let norm = NormRecord::fit(raw, mode)?;
    Ok((norm.normalize(raw), norm))
}

/// Normalized dataset plus the time bookkeeping needed to slice it in
/// Lyapunov times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeriesDataset {
    pub name: String,
    pub u: Trajectory,
    pub dt_network: f64,
    pub lyapunov_time: f64,
    pub norm: NormRecord,
    pub steps_per_lt: usize,
    /// Leading rows available for washout, training and validation; the
    /// remainder is reserved for testing.
    pub trainval_steps: usize,
}

impl TimeSeriesDataset {
    pub fn new(
        name: impl Into<String>,
        u: Trajectory,
        dt_network: f64,
        lyapunov_time: f64,
        norm: NormRecord,
        trainval_steps: usize,
    ) -> Result<Self, DynamicsError> {
        if u.len() < 2 {
            return Err(DynamicsError::InvalidDataset("need at least two rows".into()));
        }
        if !u.all_finite() {
            return Err(DynamicsError::InvalidDataset("non-finite entries".into()));
        }
        if !(dt_network > 0.0 && lyapunov_time > 0.0) {
            return Err(DynamicsError::InvalidDataset(
                "time step and Lyapunov time must be positive".into(),
            ));
        }
        if norm.scales.len() != u.dim() || norm.offsets.len() != u.dim() {
            return Err(DynamicsError::InvalidDataset("norm record dimension mismatch".into()));
        }
        if trainval_steps > u.len() {
            return Err(DynamicsError::InvalidDataset(format!(
                "train/validation span {trainval_steps} exceeds dataset length {}",
                u.len()
            )));
        }
        let steps_per_lt = ((lyapunov_time / dt_network).round() as usize).max(1);
        Ok(Self {
            name: name.into(),
            u,
            dt_network,
            lyapunov_time,
            norm,
            steps_per_lt,
            trainval_steps,
        })
    }

    pub fn n_steps(&self) -> usize {
        self.u.len()
    }

    pub fn n_u(&self) -> usize {
        self.u.dim()
    }

    /// Number of network steps covering `lt` Lyapunov times.
    pub fn lt_steps(&self, lt: f64) -> usize {
        (lt * self.steps_per_lt as f64).round() as usize
    }

    /// Time of row `index`, in Lyapunov times.
    pub fn time_lt(&self, index: usize) -> f64 {
        index as f64 * self.dt_network / self.lyapunov_time
    }

    pub fn meta(&self) -> DatasetMeta {
        DatasetMeta {
            name: self.name.clone(),
            dt_network: self.dt_network,
            lyapunov_time: self.lyapunov_time,
            norm: self.norm.clone(),
            trainval_steps: self.trainval_steps,
        }
    }

    /// Writes `t,x,y,z` rows (time in LT) and a `.meta.json` sidecar.
    pub fn write_csv(&self, path: &Path) -> Result<(), DynamicsError> {
        let csv_err = |source| DynamicsError::Csv {
            path: path.to_path_buf(),
            source,
        };
        let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
        let mut header = vec!["t".to_string()];
        header.extend(component_names(self.n_u()));
        w.write_record(&header).map_err(csv_err)?;
        for (i, row) in self.u.rows().enumerate() {
            let mut rec = Vec::with_capacity(row.len() + 1);
            rec.push(format!("{:e}", self.time_lt(i)));
            rec.extend(row.iter().map(|v| format!("{v:e}")));
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush().map_err(|source| DynamicsError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let meta_path = meta_sidecar(path);
        let json = serde_json::to_vec_pretty(&self.meta()).expect("meta serializes");
        fs::write(&meta_path, json).map_err(|source| DynamicsError::Io {
            path: meta_path,
            source,
        })
    }

    /// Reads a dataset written by [`write_csv`](Self::write_csv). Without an
    /// explicit `meta`, the `.meta.json` sidecar next to `path` is used.
    pub fn read_csv(path: &Path, meta: Option<DatasetMeta>) -> Result<Self, DynamicsError> {
        let meta = match meta {
            Some(m) => m,
            None => {
                let meta_path = meta_sidecar(path);
                let bytes = fs::read(&meta_path).map_err(|source| DynamicsError::Io {
                    path: meta_path.clone(),
                    source,
                })?;
                serde_json::from_slice(&bytes).map_err(|e| DynamicsError::Format {
                    path: meta_path,
                    message: e.to_string(),
                })?
            }
        };
        let csv_err = |source| DynamicsError::Csv {
            path: path.to_path_buf(),
            source,
        };
        let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
        let headers = r.headers().map_err(csv_err)?.clone();
        if headers.get(0) != Some("t") || headers.len() < 2 {
            return Err(DynamicsError::Format {
                path: path.to_path_buf(),
                message: "expected a leading `t` column".into(),
            });
        }
        let dim = headers.len() - 1;
        let mut u = Trajectory::new(dim);
        let mut row = vec![0.0; dim];
        for rec in r.records() {
            let rec = rec.map_err(csv_err)?;
            for j in 0..dim {
                row[j] = rec[j + 1].trim().parse().map_err(|e| DynamicsError::Format {
                    path: path.to_path_buf(),
                    message: format!("bad number `{}`: {e}", &rec[j + 1]),
                })?;
            }
            u.push_row(&row);
        }
        Self::new(
            meta.name,
            u,
            meta.dt_network,
            meta.lyapunov_time,
            meta.norm,
            meta.trainval_steps,
        )
    }
}

/// Metadata that accompanies an exported dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub name: String,
    pub dt_network: f64,
    pub lyapunov_time: f64,
    pub norm: NormRecord,
    pub trainval_steps: usize,
}

fn meta_sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

fn component_names(dim: usize) -> Vec<String> {
    const NAMES: [&str; 3] = ["x", "y", "z"];
    (0..dim)
        .map(|j| NAMES.get(j).map(|s| s.to_string()).unwrap_or(format!("u{j}")))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetVariant {
    LorenzShort,
    LorenzLong,
    KuznetsovQuasiperiodic,
    KuznetsovChaotic,
}

impl DatasetVariant {
    pub const ALL: [DatasetVariant; 4] = [
        DatasetVariant::LorenzShort,
        DatasetVariant::LorenzLong,
        DatasetVariant::KuznetsovQuasiperiodic,
        DatasetVariant::KuznetsovChaotic,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            DatasetVariant::LorenzShort => "lorenz_short",
            DatasetVariant::LorenzLong => "lorenz_long",
            DatasetVariant::KuznetsovQuasiperiodic => "kuznetsov_quasiperiodic",
            DatasetVariant::KuznetsovChaotic => "kuznetsov_chaotic",
        }
    }

    pub fn system_kind(&self) -> SystemKind {
        self.spec().system.kind
    }

    pub fn spec(&self) -> VariantSpec {
        match self {
            DatasetVariant::LorenzShort | DatasetVariant::LorenzLong => VariantSpec {
                system: OdeSystem::lorenz(),
                dt_integrator: 0.0099,
                subsample: 1,
                lyapunov_time: 1.1,
                trainval_lt: if *self == DatasetVariant::LorenzShort { 12.0 } else { 24.0 },
                norm_mode: NormMode::Global,
                canonical_ic: [1.0, 1.0, 1.0],
                transient_lt: 100.0,
                test: TestLayout {
                    start_lt: 24.0,
                    spacing_lt: 3.0,
                    count: 100,
                    interval_lt: 3.0,
                    ph_window_lt: Some(10.0),
                },
            },
            DatasetVariant::KuznetsovQuasiperiodic | DatasetVariant::KuznetsovChaotic => {
                let chaotic = *self == DatasetVariant::KuznetsovChaotic;
                VariantSpec {
                    system: OdeSystem::kuznetsov(if chaotic { 0.5 } else { 0.9 }),
                    dt_integrator: 0.0025,
                    subsample: 20,
                    lyapunov_time: 25.0,
                    trainval_lt: 7.5,
                    norm_mode: NormMode::Componentwise,
                    canonical_ic: [1.0, 0.0, 0.0],
                    transient_lt: 100.0,
                    test: TestLayout {
                        start_lt: 7.5,
                        spacing_lt: 2.0,
                        count: if chaotic { 75 } else { 50 },
                        interval_lt: 2.0,
                        ph_window_lt: chaotic.then_some(10.0),
                    },
                }
            }
        }
    }
}

impl fmt::Display for DatasetVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DatasetVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DatasetVariant::ALL
            .iter()
            .find(|v| v.as_str() == s)
            .copied()
            .ok_or_else(|| format!("unknown dataset variant `{s}`"))
    }
}

/// Equally spaced test starting points, in Lyapunov times.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestLayout {
    pub start_lt: f64,
    pub spacing_lt: f64,
    pub count: usize,
    /// Interval scored by the MSE.
    pub interval_lt: f64,
    /// Forecast length over which the prediction horizon is measured;
    /// `None` when the horizon is not meaningful.
    pub ph_window_lt: Option<f64>,
}

impl TestLayout {
    pub fn end_lt(&self) -> f64 {
        self.start_lt + (self.count.saturating_sub(1)) as f64 * self.spacing_lt + self.interval_lt.max(self.ph_window_lt.unwrap_or(0.0))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariantSpec {
    pub system: OdeSystem,
    pub dt_integrator: f64,
    pub subsample: usize,
    pub lyapunov_time: f64,
    pub trainval_lt: f64,
    pub norm_mode: NormMode,
    pub canonical_ic: [f64; 3],
    pub transient_lt: f64,
    pub test: TestLayout,
}

impl VariantSpec {
    pub fn dt_network(&self) -> f64 {
        self.dt_integrator * self.subsample as f64
    }

    pub fn steps_per_lt(&self) -> usize {
        ((self.lyapunov_time / self.dt_network()).round() as usize).max(1)
    }

    pub fn lt_steps(&self, lt: f64) -> usize {
        (lt * self.steps_per_lt() as f64).round() as usize
    }
}

/// Builds one of the benchmark datasets. The seed perturbs the canonical
/// initial condition by at most 1e-3 per component.
pub fn make_dataset(variant: DatasetVariant, seed: u64) -> Result<TimeSeriesDataset, DynamicsError> {
    let spec = variant.spec();
    let mut rng = seed::rng(seed::derive(seed, seed::stream::DATASET, 0));
    let ic: Vec<f64> = spec
        .canonical_ic
        .iter()
        .map(|c| c + rng.random_range(-1e-3..1e-3))
        .collect();
    let cfg = TrajectoryConfig {
        dt_integrator: spec.dt_integrator,
        subsample: spec.subsample,
        n_network_steps: spec.lt_steps(spec.test.end_lt()),
        initial_condition: ic,
        transient_steps: spec.lt_steps(spec.transient_lt),
    };
    let raw = integrate_forward_euler(&spec.system, &cfg)?;
    let trainval = spec.lt_steps(spec.trainval_lt);
    let reference = raw.view(0..trainval).to_owned();
    let norm = NormRecord::fit(&reference, spec.norm_mode)?;
    let u = norm.normalize(&raw);
    TimeSeriesDataset::new(
        format!("{}-seed{seed}", variant.as_str()),
        u,
        spec.dt_network(),
        spec.lyapunov_time,
        norm,
        trainval,
    )
}

/// On-disk binary cache of generated datasets keyed by (variant, seed).
#[derive(Debug, Clone)]
pub struct DatasetCache {
    dir: PathBuf,
}

const CACHE_MAGIC: &[u8; 8] = b"ESNDS001";

impl DatasetCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn path_for(&self, variant: DatasetVariant, seed: u64) -> PathBuf {
        self.dir.join(format!("{}-seed{seed}.bin", variant.as_str()))
    }

    pub fn load(&self, variant: DatasetVariant, seed: u64) -> Result<Option<TimeSeriesDataset>, DynamicsError> {
        let path = self.path_for(variant, seed);
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(None),
            Err(source) => return Err(DynamicsError::Io { path, source }),
        };
        if bytes.len() < CACHE_MAGIC.len() || &bytes[..CACHE_MAGIC.len()] != CACHE_MAGIC {
            return Err(DynamicsError::Format {
                path,
                message: "bad magic".into(),
            });
        }
        bincode::deserialize(&bytes[CACHE_MAGIC.len()..])
            .map(Some)
            .map_err(|e| DynamicsError::Format {
                path,
                message: e.to_string(),
            })
    }

    pub fn store(&self, variant: DatasetVariant, seed: u64, ds: &TimeSeriesDataset) -> Result<PathBuf, DynamicsError> {
        fs::create_dir_all(&self.dir).map_err(|source| DynamicsError::Io {
            path: self.dir.clone(),
            source,
        })?;
        let path = self.path_for(variant, seed);
        let mut bytes = CACHE_MAGIC.to_vec();
        bytes.extend(bincode::serialize(ds).expect("dataset serializes"));
        fs::write(&path, bytes).map_err(|source| DynamicsError::Io {
            path: path.clone(),
            source,
        })?;
        Ok(path)
    }

    pub fn load_or_make(&self, variant: DatasetVariant, seed: u64) -> Result<TimeSeriesDataset, DynamicsError> {
        if let Some(ds) = self.load(variant, seed)? {
            return Ok(ds);
        }
        let ds = make_dataset(variant, seed)?;
        self.store(variant, seed, &ds)?;
        Ok(ds)
    }
}
