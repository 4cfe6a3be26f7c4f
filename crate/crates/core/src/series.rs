//! Row-major multivariate time series storage.

use serde::{Deserialize, Serialize};
use std::ops::Range;

/// A time series stored row-major: one row of `dim` values per time step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    dim: usize,
    data: Vec<f64>,
}

impl Trajectory {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "trajectory dimension must be positive");
        Self { dim, data: Vec::new() }
    }

    pub fn with_capacity(dim: usize, rows: usize) -> Self {
        assert!(dim > 0, "trajectory dimension must be positive");
        Self {
            dim,
            data: Vec::with_capacity(dim * rows),
        }
    }

    pub fn zeros(rows: usize, dim: usize) -> Self {
        assert!(dim > 0, "trajectory dimension must be positive");
        Self {
            dim,
            data: vec![0.0; rows * dim],
        }
    }

    /// Builds a trajectory from a flat row-major buffer.
    ///
    /// Returns `None` if the buffer length is not a multiple of `dim`.
    pub fn from_flat(dim: usize, data: Vec<f64>) -> Option<Self> {
        if dim == 0 || data.len() % dim != 0 {
            return None;
        }
        Some(Self { dim, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Option<Self> {
        let dim = rows.first()?.as_ref().len();
        if dim == 0 {
            return None;
        }
        let mut out = Self::with_capacity(dim, rows.len());
        for r in rows {
            if r.as_ref().len() != dim {
                return None;
            }
            out.data.extend_from_slice(r.as_ref());
        }
        Some(out)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn push_row(&mut self, row: &[f64]) {
        assert_eq!(row.len(), self.dim, "row length mismatch");
        self.data.extend_from_slice(row);
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_flat(self) -> Vec<f64> {
        self.data
    }

    /// Borrowed view of rows `range`.
    pub fn view(&self, range: Range<usize>) -> SeriesView<'_> {
        SeriesView {
            dim: self.dim,
            data: &self.data[range.start * self.dim..range.end * self.dim],
        }
    }

    pub fn full_view(&self) -> SeriesView<'_> {
        self.view(0..self.len())
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Borrowed, contiguous block of rows of a [`Trajectory`].
#[derive(Debug, Clone, Copy)]
pub struct SeriesView<'a> {
    dim: usize,
    data: &'a [f64],
}

impl<'a> SeriesView<'a> {
    pub fn new(dim: usize, data: &'a [f64]) -> Self {
        assert!(dim > 0 && data.len() % dim == 0, "malformed series view");
        Self { dim, data }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn row(&self, i: usize) -> &'a [f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &'a [f64]> + 'a {
        self.data.chunks_exact(self.dim)
    }

    pub fn sub(&self, range: Range<usize>) -> SeriesView<'a> {
        SeriesView {
            dim: self.dim,
            data: &self.data[range.start * self.dim..range.end * self.dim],
        }
    }

    pub fn as_slice(&self) -> &'a [f64] {
        self.data
    }

    pub fn to_owned(&self) -> Trajectory {
        Trajectory {
            dim: self.dim,
            data: self.data.to_vec(),
        }
    }
}
