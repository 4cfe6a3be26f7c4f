//! Error measures, prediction horizon, rank correlation and ensemble
//! aggregates.

use crate::dynamics::{TestLayout, TimeSeriesDataset};
use crate::reservoir::{EsnHyperparams, Knowledge, ReservoirError, ReservoirMatrices};
use crate::series::SeriesView;
use crate::validation;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("shape mismatch: {0:?} vs {1:?}")]
    ShapeMismatch((usize, usize), (usize, usize)),
    #[error("empty input")]
    EmptyInput,
    #[error("rank vector has zero variance")]
    ZeroVariance,
    #[error("threshold must be positive")]
    InvalidThreshold,
    #[error("test interval {start}..{end} outside dataset of {len} steps")]
    OutOfRange { start: usize, end: usize, len: usize },
}

fn check_shapes(a: SeriesView<'_>, b: SeriesView<'_>) -> Result<(), MetricsError> {
    if a.len() != b.len() || a.dim() != b.dim() {
        return Err(MetricsError::ShapeMismatch((a.len(), a.dim()), (b.len(), b.dim())));
    }
    if a.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    Ok(())
}

/// Mean squared error over all rows and components.
pub fn mse(pred: SeriesView<'_>, truth: SeriesView<'_>) -> Result<f64, MetricsError> {
    check_shapes(pred, truth)?;
    let sum: f64 = pred
        .as_slice()
        .iter()
        .zip(truth.as_slice())
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    Ok(sum / pred.as_slice().len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Horizon {
    /// Prediction horizon in Lyapunov times.
    pub lt: f64,
    /// Index of the first step at or above the threshold, or the interval
    /// length when it is never reached.
    pub steps: usize,
    /// The threshold was never crossed, so `lt` is a lower bound.
    pub censored: bool,
}

/// Time until the normalized error `‖pred − truth‖ / sqrt(⟨‖truth‖²⟩)`
/// first reaches `k`. The average in the denominator runs over the whole
/// interval.
pub fn prediction_horizon(
    pred: SeriesView<'_>,
    truth: SeriesView<'_>,
    k: f64,
    dt_network: f64,
    lyapunov_time: f64,
) -> Result<Horizon, MetricsError> {
    check_shapes(pred, truth)?;
    if !(k > 0.0) {
        return Err(MetricsError::InvalidThreshold);
    }
    let n = truth.len();
    let mean_sq: f64 = truth.as_slice().iter().map(|v| v * v).sum::<f64>() / n as f64;
    let denom = mean_sq.sqrt();
    let crossing = pred.rows().zip(truth.rows()).position(|(p, t)| {
        let err: f64 = p.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        // a non-finite prediction counts as crossed
        !(err < k * denom)
    });
    let (steps, censored) = match crossing {
        Some(i) => (i, false),
        None => (n, true),
    };
    Ok(Horizon {
        lt: steps as f64 * dt_network / lyapunov_time,
        steps,
        censored,
    })
}

/// Ranks starting at 1, ties receiving the average of their positions.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i + 1;
        while j < idx.len() && x[idx[j]] == x[idx[i]] {
            j += 1;
        }
        let avg = (i + j + 1) as f64 / 2.0;
        for &k in &idx[i..j] {
            ranks[k] = avg;
        }
        i = j;
    }
    ranks
}

fn pearson(a: &[f64], b: &[f64]) -> Result<f64, MetricsError> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(MetricsError::ZeroVariance);
    }
    Ok((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64, MetricsError> {
    if x.len() != y.len() {
        return Err(MetricsError::ShapeMismatch((x.len(), 1), (y.len(), 1)));
    }
    if x.len() < 2 {
        return Err(MetricsError::EmptyInput);
    }
    pearson(&average_ranks(x), &average_ranks(y))
}

/// Percentile `p ∈ [0, 100]` with linear interpolation between order
/// statistics.
pub fn percentile(values: &[f64], p: f64) -> Result<f64, MetricsError> {
    if values.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let pos = (p / 100.0).clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    Ok(v[lo] + (v[hi] - v[lo]) * (pos - lo as f64))
}

pub fn median(values: &[f64]) -> Result<f64, MetricsError> {
    percentile(values, 50.0)
}

/// Lower bound applied to MSE values before taking logarithms.
pub const MSE_FLOOR: f64 = 1e-16;

/// `10^(mean log10 MSE)`, with each MSE floored at [`MSE_FLOOR`].
pub fn geometric_mean(mses: &[f64]) -> Result<f64, MetricsError> {
    if mses.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let s: f64 = mses.iter().map(|m| log10_floored(*m)).sum();
    Ok(10f64.powf(s / mses.len() as f64))
}

fn log10_floored(m: f64) -> f64 {
    if m.is_nan() {
        f64::INFINITY
    } else {
        m.max(MSE_FLOOR).log10()
    }
}

pub fn mean(values: &[f64]) -> Result<f64, MetricsError> {
    if values.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quartiles {
    pub p25: f64,
    pub p50: f64,
    pub p75: f64,
}

impl Quartiles {
    pub fn of(values: &[f64]) -> Result<Self, MetricsError> {
        Ok(Self {
            p25: percentile(values, 25.0)?,
            p50: percentile(values, 50.0)?,
            p75: percentile(values, 75.0)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub geometric_mean_mse: f64,
    pub mean_ph: Option<f64>,
    pub mse_quartiles: Quartiles,
    pub ph_quartiles: Option<Quartiles>,
}

/// Summary of a set of test results. `phs` may be empty when horizons are
/// not meaningful (quasiperiodic data).
pub fn aggregate(mses: &[f64], phs: &[f64]) -> Result<Aggregate, MetricsError> {
    Ok(Aggregate {
        geometric_mean_mse: geometric_mean(mses)?,
        mean_ph: if phs.is_empty() { None } else { Some(mean(phs)?) },
        mse_quartiles: Quartiles::of(mses)?,
        ph_quartiles: if phs.is_empty() { None } else { Some(Quartiles::of(phs)?) },
    })
}

/// Equally spaced test intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestSuite {
    pub start_indices: Vec<usize>,
    /// Steps scored by the MSE.
    pub interval_steps: usize,
    /// Steps over which the prediction horizon is measured; `None` when no
    /// horizon is computed (quasiperiodic data).
    pub ph_steps: Option<usize>,
    pub k_threshold: f64,
    /// Open-loop washout before each interval.
    pub washout: usize,
}

impl TestSuite {
    pub fn from_layout(dataset: &TimeSeriesDataset, layout: &TestLayout, washout: usize) -> Result<Self, MetricsError> {
        let start = dataset.lt_steps(layout.start_lt);
        let spacing = dataset.lt_steps(layout.spacing_lt);
        let suite = Self {
            start_indices: (0..layout.count).map(|i| start + i * spacing).collect(),
            interval_steps: dataset.lt_steps(layout.interval_lt),
            ph_steps: layout.ph_window_lt.map(|lt| dataset.lt_steps(lt)),
            k_threshold: 0.2,
            washout,
        };
        suite.check(dataset.n_steps())?;
        Ok(suite)
    }

    /// The first `count` starting points.
    pub fn truncated(&self, count: usize) -> Self {
        Self {
            start_indices: self.start_indices.iter().take(count).copied().collect(),
            ..self.clone()
        }
    }

    pub fn forecast_steps(&self) -> usize {
        self.interval_steps.max(self.ph_steps.unwrap_or(0))
    }

    pub fn check(&self, len: usize) -> Result<(), MetricsError> {
        if self.interval_steps == 0 || self.ph_steps == Some(0) {
            return Err(MetricsError::EmptyInput);
        }
        for &s in &self.start_indices {
            let end = s + self.forecast_steps();
            if s < self.washout.max(1) || end > len {
                return Err(MetricsError::OutOfRange { start: s, end, len });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestPoint {
    pub start: usize,
    pub mse: f64,
    pub ph: Option<Horizon>,
}

#[derive(Debug, Error)]
pub enum TestError {
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Reservoir(#[from] ReservoirError),
}

/// Forecasts from every starting point in closed loop after its washout;
/// the MSE is taken over the first `interval_steps` and the horizon over
/// the first `ph_steps` when set.
pub fn evaluate_test_suite(
    mats: &ReservoirMatrices,
    hp: &EsnHyperparams,
    w_out: &DMatrix<f64>,
    dataset: &TimeSeriesDataset,
    suite: &TestSuite,
    knowledge: Option<&dyn Knowledge>,
) -> Result<Vec<TestPoint>, TestError> {
    suite.check(dataset.n_steps())?;
    let u = dataset.u.full_view();
    suite
        .start_indices
        .iter()
        .map(|&start| {
            let target = start..start + suite.forecast_steps();
            let pred = validation::forecast(mats, hp, w_out, u, target, suite.washout, knowledge)?;
            let pred = pred.full_view();
            let m = mse(
                pred.sub(0..suite.interval_steps),
                u.sub(start..start + suite.interval_steps),
            )?;
            let ph = match suite.ph_steps {
                Some(n) => Some(prediction_horizon(
                    pred.sub(0..n),
                    u.sub(start..start + n),
                    suite.k_threshold,
                    dataset.dt_network,
                    dataset.lyapunov_time,
                )?),
                None => None,
            };
            Ok(TestPoint {
                start,
                mse: if m.is_nan() { f64::INFINITY } else { m },
                ph,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::Trajectory;

    fn traj(rows: &[[f64; 3]]) -> Trajectory {
        Trajectory::from_rows(rows).unwrap()
    }

    #[test]
    fn mse_examples() {
        let a = traj(&[[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]);
        assert_eq!(mse(a.full_view(), a.full_view()).unwrap(), 0.0);
        let b = traj(&[[2.0, 3.0, 4.0], [5.0, 6.0, 7.0]]);
        assert_eq!(mse(a.full_view(), b.full_view()).unwrap(), 1.0);
        let c = traj(&[[1.0, 2.0, 3.0]]);
        assert!(matches!(mse(a.full_view(), c.full_view()), Err(MetricsError::ShapeMismatch(..))));
    }

    #[test]
    fn spearman_examples() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert!((spearman(&x, &x).unwrap() - 1.0).abs() < 1e-15);
        assert!((spearman(&x, &[4.0, 3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-15);
        assert!((spearman(&x, &[1.0, 3.0, 2.0, 4.0]).unwrap() - 0.8).abs() < 1e-12);
        assert_eq!(spearman(&x, &[2.0; 4]), Err(MetricsError::ZeroVariance));
    }

    #[test]
    fn ties_get_average_rank() {
        assert_eq!(average_ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn aggregate_examples() {
        assert!((geometric_mean(&[1e-2, 1e-4]).unwrap() - 1e-3).abs() < 1e-15);
        let a = aggregate(&[0.5], &[2.0]).unwrap();
        assert_eq!(a.geometric_mean_mse, 0.5);
        assert_eq!(a.mean_ph, Some(2.0));
        assert_eq!(a.mse_quartiles.p25, 0.5);
        assert_eq!(a.ph_quartiles.unwrap().p75, 2.0);
        assert_eq!(aggregate(&[], &[]), Err(MetricsError::EmptyInput));
    }

    #[test]
    fn horizon_limits() {
        let t = traj(&[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
        let h = prediction_horizon(t.full_view(), t.full_view(), 0.2, 0.1, 1.0).unwrap();
        assert!(h.censored);
        assert_eq!(h.steps, 3);
        assert!((h.lt - 0.3).abs() < 1e-15);
        let far = traj(&[[5.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
        let h = prediction_horizon(far.full_view(), t.full_view(), 0.2, 0.1, 1.0).unwrap();
        assert_eq!(h.steps, 0);
        assert_eq!(h.lt, 0.0);
    }

    #[test]
    fn nan_prediction_crosses_immediately() {
        let t = traj(&[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]);
        let p = traj(&[[f64::NAN, 0.0, 0.0], [0.0, 1.0, 0.0]]);
        assert_eq!(prediction_horizon(p.full_view(), t.full_view(), 0.2, 1.0, 1.0).unwrap().steps, 0);
    }

    #[test]
    fn numpy_style_percentiles() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(percentile(&v, 25.0).unwrap(), 1.75);
        assert_eq!(percentile(&v, 50.0).unwrap(), 2.5);
        assert_eq!(percentile(&v, 100.0).unwrap(), 4.0);
    }
}
