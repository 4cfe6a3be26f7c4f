//! Hyperparameter search over the two-dimensional `(σ_in, ρ)` space.
//!
//! Optimizers work in unit coordinates: each dimension is mapped (linearly
//! or in log10) onto `[0, 1]`.

mod acquisition;
mod bayes;
mod gp;
mod simplex;

pub use acquisition::{acquisitions, AcqValues, Acquisition, HedgeState};
pub use bayes::{bayesian_optimize, BoConfig, BoResult, TraceEntry};
pub use gp::{gp_fit, gp_fit_from, GpError, GpSurrogate, Matern52};
pub use simplex::{nelder_mead, Simplex};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Point = [f64; 2];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpaceError {
    #[error("dimension {dim}: need lo < hi, got [{lo}, {hi}]")]
    EmptyInterval { dim: usize, lo: f64, hi: f64 },
    #[error("dimension {dim}: log scale needs a positive lower bound, got {lo}")]
    NonPositiveLog { dim: usize, lo: f64 },
    #[error("grid shape must be positive in every dimension")]
    EmptyGrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Linear,
    Log10,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dimension {
    pub lo: f64,
    pub hi: f64,
    pub scale: Scale,
}

impl Dimension {
    pub fn linear(lo: f64, hi: f64) -> Self {
        Self {
            lo,
            hi,
            scale: Scale::Linear,
        }
    }

    pub fn log10(lo: f64, hi: f64) -> Self {
        Self {
            lo,
            hi,
            scale: Scale::Log10,
        }
    }

    pub fn to_unit(&self, x: f64) -> f64 {
        match self.scale {
            Scale::Linear => (x - self.lo) / (self.hi - self.lo),
            Scale::Log10 => (x.log10() - self.lo.log10()) / (self.hi.log10() - self.lo.log10()),
        }
    }

    pub fn from_unit(&self, z: f64) -> f64 {
        match self.scale {
            Scale::Linear => self.lo + z * (self.hi - self.lo),
            Scale::Log10 => 10f64.powf(self.lo.log10() + z * (self.hi.log10() - self.lo.log10())),
        }
    }
}

/// Box in `(σ_in, ρ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub dims: [Dimension; 2],
}

impl SearchSpace {
    pub fn new(dims: [Dimension; 2]) -> Result<Self, SpaceError> {
        for (i, d) in dims.iter().enumerate() {
            if !(d.lo < d.hi) {
                return Err(SpaceError::EmptyInterval {
                    dim: i,
                    lo: d.lo,
                    hi: d.hi,
                });
            }
            if d.scale == Scale::Log10 && !(d.lo > 0.0) {
                return Err(SpaceError::NonPositiveLog { dim: i, lo: d.lo });
            }
        }
        Ok(Self { dims })
    }

    pub fn to_unit(&self, x: Point) -> Point {
        [self.dims[0].to_unit(x[0]), self.dims[1].to_unit(x[1])]
    }

    pub fn from_unit(&self, z: Point) -> Point {
        [self.dims[0].from_unit(z[0]), self.dims[1].from_unit(z[1])]
    }
}

/// Equally spaced unit coordinates with endpoints; a single point sits in
/// the middle.
pub fn unit_ticks(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.5],
        _ => (0..n).map(|i| i as f64 / (n - 1) as f64).collect(),
    }
}

/// Row-major tensor lattice (first dimension outer) in unit coordinates.
pub fn unit_lattice(shape: [usize; 2]) -> Vec<Point> {
    let a = unit_ticks(shape[0]);
    let b = unit_ticks(shape[1]);
    a.iter().flat_map(|&x| b.iter().map(move |&y| [x, y])).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridEntry {
    pub index: usize,
    pub unit: Point,
    pub point: Point,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub best_point: Point,
    pub best_value: f64,
    pub best_index: usize,
    pub table: Vec<GridEntry>,
}

/// Index of the smallest value; NaN counts as +∞ and ties go to the lowest
/// index.
pub fn argmin(values: impl IntoIterator<Item = f64>) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.into_iter().enumerate() {
        let v = if v.is_nan() { f64::INFINITY } else { v };
        match best {
            Some((_, b)) if v >= b => {}
            _ => best = Some((i, v)),
        }
    }
    best
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError<E> {
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error("objective failed at grid index {index}: {source}")]
    Objective { index: usize, source: E },
}

/// Exhaustive evaluation on a tensor grid.
pub fn grid_search<E, F>(mut objective: F, space: &SearchSpace, shape: [usize; 2]) -> Result<GridResult, GridError<E>>
where
    F: FnMut(Point) -> Result<f64, E>,
{
    if shape.contains(&0) {
        return Err(SpaceError::EmptyGrid.into());
    }
    let mut table = Vec::with_capacity(shape[0] * shape[1]);
    for (index, unit) in unit_lattice(shape).into_iter().enumerate() {
        let point = space.from_unit(unit);
        let value = objective(point).map_err(|source| GridError::Objective { index, source })?;
        table.push(GridEntry {
            index,
            unit,
            point,
            value,
        });
    }
    let (best_index, best_value) = argmin(table.iter().map(|e| e.value)).expect("nonempty grid");
    Ok(GridResult {
        best_point: table[best_index].point,
        best_value,
        best_index,
        table,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::convert::Infallible;

    fn lorenz_space() -> SearchSpace {
        SearchSpace::new([Dimension::linear(0.5, 5.0), Dimension::linear(0.1, 1.0)]).unwrap()
    }

    #[test]
    fn grid_spacing_lorenz() {
        let r = grid_search::<Infallible, _>(|_| Ok(0.0), &lorenz_space(), [7, 7]).unwrap();
        assert_eq!(r.table.len(), 49);
        let p1 = r.table[1].point;
        let p7 = r.table[7].point;
        assert!((p1[1] - 0.1 - 0.15).abs() < 1e-12);
        assert!((p7[0] - 0.5 - 0.75).abs() < 1e-12);
        assert_eq!(r.best_index, 0);
    }

    #[test]
    fn planted_minimum() {
        let space = lorenz_space();
        let target = space.from_unit([0.5, 0.5]);
        let r = grid_search::<Infallible, _>(
            |p| Ok((p[0] - target[0]).hypot(p[1] - target[1])),
            &space,
            [7, 7],
        )
        .unwrap();
        assert_eq!(r.best_index, 3 * 7 + 3);
        assert!((r.best_point[0] - target[0]).abs() < 1e-12);
    }

    #[test]
    fn log_round_trip() {
        let d = Dimension::log10(0.01, 1.0);
        assert!((d.from_unit(0.5) - 0.1).abs() < 1e-15);
        assert!((d.to_unit(0.1) - 0.5).abs() < 1e-15);
        assert!(SearchSpace::new([Dimension::log10(0.0, 1.0), Dimension::linear(0.0, 1.0)]).is_err());
        assert!(SearchSpace::new([Dimension::linear(1.0, 1.0), Dimension::linear(0.0, 1.0)]).is_err());
    }

    #[test]
    fn nan_is_never_best() {
        assert_eq!(argmin([f64::NAN, 2.0, 1.0, 1.0]), Some((2, 1.0)));
    }
}
