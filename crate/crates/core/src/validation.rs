//! Fold schedules for single-shot, walk-forward, k-fold and recycle
//! validation, and the mean log10 MSE objective evaluated over them.
//!
//! All ranges index target rows of the train/validation span of a dataset.
//! A validation interval `[a, b)` is predicted in closed loop after an
//! open-loop washout over `[a − w, a)`.

use crate::dynamics::{DatasetVariant, TimeSeriesDataset};
use crate::metrics;
use crate::reservoir::{self, EsnHyperparams, Knowledge, ReservoirError, ReservoirMatrices, ReservoirState};
use crate::series::SeriesView;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::ops::Range;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ValidationError {
    #[error("dataset of {available} steps too short, need at least {required}")]
    DatasetTooShort { required: usize, available: usize },
    #[error("invalid schedule config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Reservoir(#[from] ReservoirError),
}

/// Log10 MSE bounds applied to every fold.
pub const LOG_MSE_FLOOR: f64 = -16.0;
pub const LOG_MSE_CAP: f64 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Strategy {
    Ssv,
    Wfv,
    Kfv,
    Rv,
}

/// A named validation strategy as used in experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StrategyKind {
    #[serde(rename = "SSV")]
    Ssv,
    #[serde(rename = "WFV")]
    Wfv,
    #[serde(rename = "WFV_c")]
    WfvC,
    /// Chaotic walk-forward over a shorter training window, so that more
    /// folds fit in the long dataset.
    #[serde(rename = "WFV_c*")]
    WfvCStar,
    #[serde(rename = "KFV")]
    Kfv,
    #[serde(rename = "KFV_c")]
    KfvC,
    #[serde(rename = "RV")]
    Rv,
    #[serde(rename = "RV_c")]
    RvC,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 8] = [
        StrategyKind::Ssv,
        StrategyKind::Wfv,
        StrategyKind::WfvC,
        StrategyKind::WfvCStar,
        StrategyKind::Kfv,
        StrategyKind::KfvC,
        StrategyKind::Rv,
        StrategyKind::RvC,
    ];

    pub fn base(&self) -> Strategy {
        match self {
            StrategyKind::Ssv => Strategy::Ssv,
            StrategyKind::Wfv | StrategyKind::WfvC | StrategyKind::WfvCStar => Strategy::Wfv,
            StrategyKind::Kfv | StrategyKind::KfvC => Strategy::Kfv,
            StrategyKind::Rv | StrategyKind::RvC => Strategy::Rv,
        }
    }

    pub fn chaotic(&self) -> bool {
        matches!(
            self,
            StrategyKind::WfvC | StrategyKind::WfvCStar | StrategyKind::KfvC | StrategyKind::RvC
        )
    }

    pub fn label(&self) -> &'static str {
        match self {
            StrategyKind::Ssv => "SSV",
            StrategyKind::Wfv => "WFV",
            StrategyKind::WfvC => "WFV_c",
            StrategyKind::WfvCStar => "WFV_c*",
            StrategyKind::Kfv => "KFV",
            StrategyKind::KfvC => "KFV_c",
            StrategyKind::Rv => "RV",
            StrategyKind::RvC => "RV_c",
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for StrategyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        StrategyKind::ALL
            .iter()
            .find(|k| k.label().eq_ignore_ascii_case(s))
            .copied()
            .ok_or_else(|| format!("unknown strategy `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    /// Open-loop washout immediately preceding `val`.
    pub washout: Range<usize>,
    /// Target ranges used to fit the readout.
    pub train: Vec<Range<usize>>,
    pub val: Range<usize>,
    /// Steps `val` was moved forward to leave room for the washout.
    pub val_shift: usize,
}

impl Fold {
    pub fn nominal_val_start(&self) -> usize {
        self.val.start - self.val_shift
    }

    pub fn train_len(&self) -> usize {
        self.train.iter().map(|r| r.len()).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldSchedule {
    pub strategy: Strategy,
    pub chaotic: bool,
    pub folds: Vec<Fold>,
    pub v_steps: usize,
    pub shift_steps: usize,
    /// Length of the span the schedule was built on.
    pub n_steps: usize,
}

impl FoldSchedule {
    pub fn k(&self) -> usize {
        self.folds.len()
    }

    /// True when a single readout serves every fold.
    pub fn trains_once(&self) -> bool {
        self.strategy == Strategy::Rv
    }

    /// JSON report with every range in steps and in Lyapunov times.
    pub fn report(&self, steps_per_lt: usize) -> serde_json::Value {
        let lt = |i: usize| i as f64 / steps_per_lt as f64;
        let range = |r: &Range<usize>| {
            serde_json::json!({
                "steps": [r.start, r.end],
                "lt": [lt(r.start), lt(r.end)],
            })
        };
        let folds: Vec<_> = self
            .folds
            .iter()
            .map(|f| {
                serde_json::json!({
                    "washout": range(&f.washout),
                    "train": f.train.iter().map(range).collect::<Vec<_>>(),
                    "val": range(&f.val),
                    "val_shift_steps": f.val_shift,
                })
            })
            .collect();
        serde_json::json!({
            "strategy": self.strategy,
            "chaotic": self.chaotic,
            "v_steps": self.v_steps,
            "shift_steps": self.shift_steps,
            "n_steps": self.n_steps,
            "steps_per_lt": steps_per_lt,
            "folds": folds,
        })
    }
}

/// Step counts that define a schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleConfig {
    pub v_steps: usize,
    /// Walk-forward training window, including `train_washout`.
    pub train_steps: usize,
    /// Leading targets of the series excluded from every training set while
    /// the reservoir forgets its initial state.
    pub train_washout: usize,
    /// Open-loop washout before each closed-loop validation interval.
    pub washout: usize,
    /// Fold-to-fold shift; `v_steps` for regular, one LT for chaotic.
    pub shift_steps: usize,
}

/// Builds the folds of `strategy` over a span of `n` steps.
pub fn build_schedule(strategy: Strategy, chaotic: bool, n: usize, cfg: &ScheduleConfig) -> Result<FoldSchedule, ValidationError> {
    let v = cfg.v_steps;
    let w = cfg.washout;
    let w_tr = cfg.train_washout;
    let shift = cfg.shift_steps;
    if v == 0 || shift == 0 {
        return Err(ValidationError::InvalidConfig("v_steps and shift_steps must be positive".into()));
    }
    if w == 0 || w_tr == 0 {
        return Err(ValidationError::InvalidConfig("washouts must be positive".into()));
    }
    let too_short = |required: usize| ValidationError::DatasetTooShort { required, available: n };
    let mut folds = Vec::new();
    match strategy {
        Strategy::Ssv => {
            let required = (w_tr + 1).max(w) + v;
            if n < required {
                return Err(too_short(required));
            }
            let val = n - v..n;
            folds.push(Fold {
                washout: val.start - w..val.start,
                train: vec![w_tr..val.start],
                val,
                val_shift: 0,
            });
        }
        Strategy::Wfv => {
            if cfg.train_steps <= w_tr || cfg.train_steps < w {
                return Err(ValidationError::InvalidConfig(
                    "walk-forward training window must exceed both washouts".into(),
                ));
            }
            let m = cfg.train_steps + v;
            if n < m {
                return Err(too_short(m));
            }
            let k = (n - m) / shift + 1;
            for i in 0..k {
                let start = i * shift;
                let val = start + cfg.train_steps..start + m;
                folds.push(Fold {
                    washout: val.start - w..val.start,
                    train: vec![start + w_tr..start + cfg.train_steps],
                    val,
                    val_shift: 0,
                });
            }
        }
        Strategy::Kfv | Strategy::Rv => {
            let required = (w + v).max(w_tr + 1);
            if n < required {
                return Err(too_short(required));
            }
            let offset = (n - v) % shift;
            let k = (n - v - offset) / shift + 1;
            for j in 0..k {
                let nominal = offset + j * shift;
                let start = nominal.max(w);
                let val = start..start + v;
                let train = if strategy == Strategy::Rv {
                    vec![w_tr..n]
                } else {
                    let mut t = Vec::new();
                    if val.start > w_tr {
                        t.push(w_tr..val.start);
                    }
                    if val.end < n {
                        t.push(val.end.max(w_tr)..n);
                    }
                    t
                };
                folds.push(Fold {
                    washout: val.start - w..val.start,
                    train,
                    val,
                    val_shift: start - nominal,
                });
            }
        }
    }
    if folds.iter().any(|f| f.train_len() == 0) {
        return Err(too_short(n + v));
    }
    Ok(FoldSchedule {
        strategy,
        chaotic,
        folds,
        v_steps: v,
        shift_steps: shift,
        n_steps: n,
    })
}

/// Validation geometry of a dataset, in Lyapunov times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationGeometry {
    pub v_lt: f64,
    pub train_washout_lt: f64,
    pub washout_lt: f64,
    /// Walk-forward training window (including the training washout).
    pub wfv_train_lt: f64,
    /// Training window of the starred chaotic walk-forward, if defined.
    pub wfv_star_train_lt: Option<f64>,
    /// Chaotic fold shift.
    pub chaotic_shift_lt: f64,
}

impl ValidationGeometry {
    pub fn for_variant(variant: DatasetVariant) -> Self {
        match variant {
            DatasetVariant::LorenzShort => Self {
                v_lt: 3.0,
                train_washout_lt: 1.0,
                washout_lt: 1.0,
                wfv_train_lt: 6.0,
                wfv_star_train_lt: None,
                chaotic_shift_lt: 1.0,
            },
            DatasetVariant::LorenzLong => Self {
                v_lt: 3.0,
                train_washout_lt: 1.0,
                washout_lt: 1.0,
                wfv_train_lt: 9.0,
                wfv_star_train_lt: Some(6.0),
                chaotic_shift_lt: 1.0,
            },
            DatasetVariant::KuznetsovQuasiperiodic | DatasetVariant::KuznetsovChaotic => Self {
                v_lt: 2.0,
                train_washout_lt: 0.5,
                washout_lt: 1.0,
                wfv_train_lt: 3.5,
                wfv_star_train_lt: None,
                chaotic_shift_lt: 1.0,
            },
        }
    }

    pub fn config(&self, kind: StrategyKind, dataset: &TimeSeriesDataset) -> Result<ScheduleConfig, ValidationError> {
        let v_steps = dataset.lt_steps(self.v_lt);
        let train_lt = match kind {
            StrategyKind::WfvCStar => self.wfv_star_train_lt.ok_or_else(|| {
                ValidationError::InvalidConfig(format!("{kind} is not defined for dataset {}", dataset.name))
            })?,
            _ => self.wfv_train_lt,
        };
        let shift_steps = if kind.chaotic() {
            dataset.lt_steps(self.chaotic_shift_lt)
        } else {
            v_steps
        };
        Ok(ScheduleConfig {
            v_steps,
            train_steps: dataset.lt_steps(train_lt),
            train_washout: dataset.lt_steps(self.train_washout_lt),
            washout: dataset.lt_steps(self.washout_lt),
            shift_steps,
        })
    }

    /// Schedule of `kind` over the train/validation span of `dataset`.
    pub fn schedule(&self, kind: StrategyKind, dataset: &TimeSeriesDataset) -> Result<FoldSchedule, ValidationError> {
        let cfg = self.config(kind, dataset)?;
        build_schedule(kind.base(), kind.chaotic(), dataset.trainval_steps, &cfg)
    }
}

/// Result of one objective evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveOutcome {
    /// Mean over folds of the clamped log10 MSE.
    pub value: f64,
    pub fold_log_mse: Vec<f64>,
    pub ridge_solves: usize,
}

/// Clamped log10 of an MSE; non-finite values map to the cap.
pub fn clamp_log_mse(mse: f64) -> f64 {
    if !mse.is_finite() {
        return LOG_MSE_CAP;
    }
    if mse <= 0.0 {
        return LOG_MSE_FLOOR;
    }
    mse.log10().clamp(LOG_MSE_FLOOR, LOG_MSE_CAP)
}

/// Everything an objective evaluation needs apart from the hyperparameter
/// point.
#[derive(Clone, Copy)]
pub struct ObjectiveContext<'a> {
    /// Normalized series; only rows below `schedule.n_steps` are touched.
    pub u: SeriesView<'a>,
    pub mats: &'a ReservoirMatrices,
    pub base_hp: &'a EsnHyperparams,
    pub schedule: &'a FoldSchedule,
    pub knowledge: Option<&'a dyn Knowledge>,
}

/// Gram blocks of the harvested states over a set of disjoint target
/// segments.
struct SegmentGrams {
    bounds: Vec<usize>,
    gram: Vec<Option<(DMatrix<f64>, DMatrix<f64>)>>,
}

impl SegmentGrams {
    fn new(harvest: &DMatrix<f64>, u: SeriesView<'_>, ranges: &[&Range<usize>]) -> Self {
        let mut bounds: Vec<usize> = ranges.iter().flat_map(|r| [r.start, r.end]).collect();
        bounds.sort_unstable();
        bounds.dedup();
        let gram = bounds
            .windows(2)
            .map(|w| {
                let (a, b) = (w[0], w[1]);
                let used = ranges.iter().any(|r| r.start <= a && b <= r.end);
                used.then(|| {
                    // column c of the harvest regresses target c + 1
                    let states = harvest.columns(a - 1, b - a);
                    let targets = reservoir::targets_matrix(u.sub(a..b));
                    (&states * states.transpose(), &states * targets.transpose())
                })
            })
            .collect();
        Self { bounds, gram }
    }

    fn assemble(&self, train: &[Range<usize>]) -> (DMatrix<f64>, DMatrix<f64>) {
        let mut g: Option<DMatrix<f64>> = None;
        let mut c: Option<DMatrix<f64>> = None;
        for (i, w) in self.bounds.windows(2).enumerate() {
            if !train.iter().any(|r| r.start <= w[0] && w[1] <= r.end) {
                continue;
            }
            let (gs, cs) = self.gram[i].as_ref().expect("segment harvested");
            match (&mut g, &mut c) {
                (Some(g), Some(c)) => {
                    *g += gs;
                    *c += cs;
                }
                _ => {
                    g = Some(gs.clone());
                    c = Some(cs.clone());
                }
            }
        }
        (g.expect("nonempty training set"), c.expect("nonempty training set"))
    }
}

/// Readout state harvest over `u[0..end−1)`: column `c` regresses row `c + 1`.
pub fn harvest(
    mats: &ReservoirMatrices,
    hp: &EsnHyperparams,
    u: SeriesView<'_>,
    end: usize,
    knowledge: Option<&dyn Knowledge>,
) -> Result<DMatrix<f64>, ReservoirError> {
    let (r, _) = reservoir::run_open_loop(mats, hp, u.sub(0..end - 1), 0, knowledge, None)?;
    Ok(r)
}

/// Fits a readout on the target rows `train` (every range must start at
/// index 1 or later).
pub fn fit_readout(
    mats: &ReservoirMatrices,
    hp: &EsnHyperparams,
    u: SeriesView<'_>,
    train: &[Range<usize>],
    knowledge: Option<&dyn Knowledge>,
) -> Result<DMatrix<f64>, ValidationError> {
    let end = train.iter().map(|r| r.end).max().unwrap_or(0);
    if train.iter().any(|r| r.start == 0) || end < 2 {
        return Err(ValidationError::InvalidConfig("training targets must start at row 1 or later".into()));
    }
    let r = harvest(mats, hp, u, end, knowledge)?;
    let refs: Vec<&Range<usize>> = train.iter().collect();
    let grams = SegmentGrams::new(&r, u, &refs);
    let (g, c) = grams.assemble(train);
    Ok(reservoir::solve_ridge(&g, &c, hp.beta_tik)?)
}

/// Closed-loop forecast of `u[target]` after an open-loop washout of `w`
/// steps from a zero reservoir state.
pub fn forecast(
    mats: &ReservoirMatrices,
    hp: &EsnHyperparams,
    w_out: &DMatrix<f64>,
    u: SeriesView<'_>,
    target: Range<usize>,
    washout: usize,
    knowledge: Option<&dyn Knowledge>,
) -> Result<crate::series::Trajectory, ReservoirError> {
    assert!(washout >= 1 && target.start >= washout, "washout must precede the target");
    let mut state = ReservoirState::zeros(mats.n_r());
    reservoir::drive(mats, hp, u.sub(target.start - washout..target.start - 1), &mut state)?;
    reservoir::run_closed_loop(mats, hp, w_out, &state, u.row(target.start - 1), target.len(), knowledge)
}

/// Mean clamped log10 MSE of closed-loop forecasts over the schedule's
/// validation intervals at `(σ_in, ρ)`.
pub fn evaluate_objective(ctx: &ObjectiveContext<'_>, sigma_in: f64, rho: f64) -> Result<ObjectiveOutcome, ValidationError> {
    let schedule = ctx.schedule;
    let hp = ctx.base_hp.with_point(sigma_in, rho);
    let n = schedule.n_steps;
    if ctx.u.len() < n {
        return Err(ValidationError::DatasetTooShort {
            required: n,
            available: ctx.u.len(),
        });
    }
    let train_end = schedule
        .folds
        .iter()
        .flat_map(|f| f.train.iter().map(|r| r.end))
        .max()
        .unwrap_or(0);
    let r = harvest(ctx.mats, &hp, ctx.u, train_end, ctx.knowledge)?;
    let ranges: Vec<&Range<usize>> = schedule.folds.iter().flat_map(|f| f.train.iter()).collect();
    let grams = SegmentGrams::new(&r, ctx.u, &ranges);

    let mut ridge_solves = 0;
    let mut shared: Option<DMatrix<f64>> = None;
    let mut fold_log_mse = Vec::with_capacity(schedule.k());
    for fold in &schedule.folds {
        let w_out = match (&shared, schedule.trains_once()) {
            (Some(w), true) => w.clone(),
            _ => {
                let (g, c) = grams.assemble(&fold.train);
                let w = reservoir::solve_ridge(&g, &c, hp.beta_tik)?;
                ridge_solves += 1;
                if schedule.trains_once() {
                    shared = Some(w.clone());
                }
                w
            }
        };
        let pred = forecast(ctx.mats, &hp, &w_out, ctx.u, fold.val.clone(), fold.washout.len(), ctx.knowledge)?;
        let truth = ctx.u.sub(fold.val.clone());
        let mse = metrics::mse(pred.full_view(), truth).unwrap_or(f64::INFINITY);
        fold_log_mse.push(clamp_log_mse(mse));
    }
    let value = fold_log_mse.iter().sum::<f64>() / fold_log_mse.len() as f64;
    Ok(ObjectiveOutcome {
        value,
        fold_log_mse,
        ridge_solves,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(v: usize, train: usize, w_tr: usize, w: usize, shift: usize) -> ScheduleConfig {
        ScheduleConfig {
            v_steps: v,
            train_steps: train,
            train_washout: w_tr,
            washout: w,
            shift_steps: shift,
        }
    }

    #[test]
    fn ssv_lorenz_short_split() {
        let s = build_schedule(Strategy::Ssv, false, 1332, &cfg(333, 666, 111, 111, 333)).unwrap();
        assert_eq!(s.k(), 1);
        let f = &s.folds[0];
        assert_eq!(f.train, vec![111..999]);
        assert_eq!(f.val, 999..1332);
        assert_eq!(f.washout, 888..999);
    }

    #[test]
    fn kfv_counts_on_twelve_lt() {
        let lt = 111;
        let regular = build_schedule(Strategy::Kfv, false, 12 * lt, &cfg(3 * lt, 0, lt, lt, 3 * lt)).unwrap();
        let starts: Vec<usize> = regular.folds.iter().map(|f| f.nominal_val_start()).collect();
        assert_eq!(starts, vec![0, 3 * lt, 6 * lt, 9 * lt]);
        assert_eq!(regular.folds[0].val, lt..4 * lt);
        assert_eq!(regular.folds[0].val_shift, lt);
        let chaotic = build_schedule(Strategy::Kfv, true, 12 * lt, &cfg(3 * lt, 0, lt, lt, lt)).unwrap();
        assert_eq!(chaotic.k(), 10);
    }

    #[test]
    fn kfv_train_excludes_val() {
        let s = build_schedule(Strategy::Kfv, false, 1332, &cfg(333, 0, 111, 111, 333)).unwrap();
        for f in &s.folds {
            for r in &f.train {
                assert!(r.end <= f.val.start || r.start >= f.val.end);
                assert!(r.start >= 111);
            }
            assert_eq!(f.train_len() + f.val.len(), 1332 - 111);
        }
    }

    #[test]
    fn rv_trains_on_everything() {
        let s = build_schedule(Strategy::Rv, true, 1332, &cfg(333, 0, 111, 111, 111)).unwrap();
        assert!(s.trains_once());
        assert!(s.folds.iter().all(|f| f.train == vec![111..1332]));
    }

    #[test]
    fn wfv_fold_counts() {
        let lt = 111;
        let short = build_schedule(Strategy::Wfv, false, 12 * lt, &cfg(3 * lt, 6 * lt, lt, lt, 3 * lt)).unwrap();
        assert_eq!(short.k(), 2);
        let long = build_schedule(Strategy::Wfv, false, 24 * lt, &cfg(3 * lt, 9 * lt, lt, lt, 3 * lt)).unwrap();
        assert_eq!(long.k(), 5);
        assert_eq!(long.folds[4].val, 21 * lt..24 * lt);
    }

    #[test]
    fn too_short_reports_requirement() {
        let e = build_schedule(Strategy::Wfv, false, 100, &cfg(50, 80, 10, 10, 50)).unwrap_err();
        assert_eq!(e, ValidationError::DatasetTooShort { required: 130, available: 100 });
    }

    #[test]
    fn log_mse_guards() {
        assert_eq!(clamp_log_mse(0.0), LOG_MSE_FLOOR);
        assert_eq!(clamp_log_mse(f64::NAN), LOG_MSE_CAP);
        assert_eq!(clamp_log_mse(1e300), LOG_MSE_CAP);
        assert!((clamp_log_mse(1e-3) + 3.0).abs() < 1e-15);
    }

    #[test]
    fn strategy_labels_round_trip() {
        for k in StrategyKind::ALL {
            assert_eq!(k.label().parse::<StrategyKind>().unwrap(), k);
        }
    }
}
