//! Noise-free Gaussian process regression with a Matérn 5/2 kernel.

use super::simplex::nelder_mead;
use super::Point;
use crate::seed;
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GpError {
    #[error("no training data")]
    Empty,
    #[error("x and y lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("duplicate training input at index {0}")]
    DuplicatePoint(usize),
    #[error("non-finite training target at index {0}")]
    NonFinite(usize),
    #[error("kernel matrix not positive definite even with jitter {0:e}")]
    FactorizationFailure(f64),
}

const BASE_JITTER: f64 = 1e-10;
const MAX_JITTER: f64 = 1e-6;
const LENGTH_BOUNDS: (f64, f64) = (1e-2, 10.0);
const VARIANCE_BOUNDS: (f64, f64) = (1e-4, 1e4);
/// Seeded random restarts on top of the initial start.
const N_RESTARTS: usize = 2;

/// Matérn 5/2 kernel with one length scale per dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Matern52 {
    pub length_scales: [f64; 2],
    pub signal_var: f64,
}

impl Matern52 {
    pub fn eval(&self, a: &Point, b: &Point) -> f64 {
        let d0 = (a[0] - b[0]) / self.length_scales[0];
        let d1 = (a[1] - b[1]) / self.length_scales[1];
        let s5r = (5.0 * (d0 * d0 + d1 * d1)).sqrt();
        self.signal_var * (1.0 + s5r + s5r * s5r / 3.0) * (-s5r).exp()
    }

    fn gram(&self, x: &[Point], jitter: f64) -> DMatrix<f64> {
        let n = x.len();
        let mut k = DMatrix::zeros(n, n);
        for j in 0..n {
            k[(j, j)] = self.signal_var + jitter;
            for i in j + 1..n {
                let v = self.eval(&x[i], &x[j]);
                k[(i, j)] = v;
                k[(j, i)] = v;
            }
        }
        k
    }

    fn to_log(self) -> [f64; 3] {
        [self.length_scales[0].ln(), self.length_scales[1].ln(), self.signal_var.ln()]
    }

    fn from_log(t: &[f64]) -> Self {
        Self {
            length_scales: [t[0].exp(), t[1].exp()],
            signal_var: t[2].exp(),
        }
    }
}

/// Fitted GP posterior. Targets are standardized internally; every value
/// returned is in the original units.
#[derive(Debug, Clone)]
pub struct GpSurrogate {
    x: Vec<Point>,
    y: Vec<f64>,
    y_mean: f64,
    y_scale: f64,
    kernel: Matern52,
    jitter: f64,
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
}

fn validate(x: &[Point], y: &[f64]) -> Result<(), GpError> {
    if x.is_empty() {
        return Err(GpError::Empty);
    }
    if x.len() != y.len() {
        return Err(GpError::LengthMismatch(x.len(), y.len()));
    }
    if let Some(i) = y.iter().position(|v| !v.is_finite()) {
        return Err(GpError::NonFinite(i));
    }
    for i in 1..x.len() {
        if x[..i].iter().any(|p| p == &x[i]) {
            return Err(GpError::DuplicatePoint(i));
        }
    }
    Ok(())
}

fn standardization(y: &[f64]) -> (f64, f64) {
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let var = y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let sd = var.sqrt();
    (mean, if sd > 0.0 { sd } else { 1.0 })
}

/// Cholesky factor of the kernel matrix, raising the jitter tenfold on
/// failure up to 1e-6.
fn factor(kernel: &Matern52, x: &[Point]) -> Result<(Cholesky<f64, Dyn>, f64), GpError> {
    let mut jitter = BASE_JITTER;
    loop {
        if let Some(ch) = kernel.gram(x, jitter).cholesky() {
            return Ok((ch, jitter));
        }
        if jitter >= MAX_JITTER {
            return Err(GpError::FactorizationFailure(jitter));
        }
        jitter = (jitter * 10.0).min(MAX_JITTER);
    }
}

/// Log marginal likelihood of standardized targets `z`.
fn log_marginal(kernel: &Matern52, x: &[Point], z: &DVector<f64>) -> f64 {
    let Ok((ch, _)) = factor(kernel, x) else {
        return f64::NEG_INFINITY;
    };
    let alpha = ch.solve(z);
    let log_det: f64 = ch.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    -0.5 * z.dot(&alpha) - log_det - 0.5 * x.len() as f64 * (2.0 * std::f64::consts::PI).ln()
}

impl GpSurrogate {
    /// Conditions a GP with fixed kernel hyperparameters. Without
    /// `standardize` the targets are used as given (zero prior mean).
    pub fn with_kernel(x: &[Point], y: &[f64], kernel: Matern52, standardize: bool) -> Result<Self, GpError> {
        validate(x, y)?;
        let (y_mean, y_scale) = if standardize { standardization(y) } else { (0.0, 1.0) };
        let z = DVector::from_iterator(y.len(), y.iter().map(|v| (v - y_mean) / y_scale));
        let (chol, jitter) = factor(&kernel, x)?;
        let alpha = chol.solve(&z);
        Ok(Self {
            x: x.to_vec(),
            y: y.to_vec(),
            y_mean,
            y_scale,
            kernel,
            jitter,
            chol,
            alpha,
        })
    }

    pub fn kernel(&self) -> &Matern52 {
        &self.kernel
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn x_train(&self) -> &[Point] {
        &self.x
    }

    pub fn y_train(&self) -> &[f64] {
        &self.y
    }

    /// Posterior mean and standard deviation at `x`.
    pub fn posterior(&self, x: &Point) -> (f64, f64) {
        let k = DVector::from_iterator(self.x.len(), self.x.iter().map(|p| self.kernel.eval(p, x)));
        let mean = k.dot(&self.alpha);
        let v = self.chol.l_dirty().solve_lower_triangular(&k).expect("nonsingular factor");
        let var = self.kernel.signal_var - v.norm_squared();
        let var = if var < 0.0 { 0.0 } else { var };
        (self.y_mean + self.y_scale * mean, self.y_scale * var.sqrt())
    }

    pub fn mean(&self, x: &Point) -> f64 {
        let m: f64 = self.x.iter().zip(self.alpha.iter()).map(|(p, a)| self.kernel.eval(p, x) * a).sum();
        self.y_mean + self.y_scale * m
    }
}

/// Fits a GP by maximizing the log marginal likelihood of the standardized
/// targets over length scales and signal variance, with Nelder–Mead in log
/// space from a fixed start plus seeded random restarts.
pub fn gp_fit(x: &[Point], y: &[f64], seed: u64) -> Result<GpSurrogate, GpError> {
    gp_fit_from(x, y, seed, None)
}

/// As [`gp_fit`], but the first start is `warm` when given (typically the
/// kernel of the previous fit in a sequential loop).
pub fn gp_fit_from(x: &[Point], y: &[f64], seed: u64, warm: Option<Matern52>) -> Result<GpSurrogate, GpError> {
    validate(x, y)?;
    let (mean, sd) = standardization(y);
    let z = DVector::from_iterator(y.len(), y.iter().map(|v| (v - mean) / sd));
    let lo = [LENGTH_BOUNDS.0.ln(), LENGTH_BOUNDS.0.ln(), VARIANCE_BOUNDS.0.ln()];
    let hi = [LENGTH_BOUNDS.1.ln(), LENGTH_BOUNDS.1.ln(), VARIANCE_BOUNDS.1.ln()];
    let neg_lml = |t: &[f64]| -log_marginal(&Matern52::from_log(t), x, &z);

    let mut rng = seed::rng(seed::derive(seed, seed::stream::GP_RESTARTS, x.len() as u64));
    let first = warm.unwrap_or(Matern52 {
        length_scales: [0.3, 0.3],
        signal_var: 1.0,
    });
    let clamp = |t: [f64; 3]| [0, 1, 2].map(|i| t[i].clamp(lo[i], hi[i]));
    let mut starts = vec![clamp(first.to_log())];
    for _ in 0..N_RESTARTS {
        starts.push([
            rng.random_range(lo[0]..hi[0]),
            rng.random_range(lo[1]..hi[1]),
            rng.random_range(lo[2]..hi[2]),
        ]);
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    for s in &starts {
        let r = nelder_mead(neg_lml, s, 0.5, &lo, &hi, 200, 1e-9);
        if r.value.is_finite() && best.as_ref().is_none_or(|(v, _)| r.value < *v) {
            best = Some((r.value, r.x));
        }
    }
    let kernel = match best {
        Some((_, t)) => Matern52::from_log(&t),
        None => Matern52::from_log(&starts[0]),
    };
    GpSurrogate::with_kernel(x, y, kernel, true)
}
