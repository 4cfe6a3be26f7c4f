//! Echo state network core.
//!
//! The reservoir update is
//! `r' = tanh(σ_in Ŵ_in [u; b_in] + ρ Ŵ r)` with readout state
//! `r̂ = [r'; 1]`, optionally extended by a knowledge term `K(u)`. Only the
//! readout `W_out` is trained, by ridge regression on harvested states.

use crate::seed;
use crate::series::{SeriesView, Trajectory};
use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReservoirError {
    #[error("invalid hyperparameters: {0}")]
    InvalidHyperparams(String),
    #[error("spectral radius estimation failed after {attempts} attempts")]
    SpectralRadiusFailure { attempts: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("slice of length {len} too short for washout {washout}")]
    SliceTooShort { len: usize, washout: usize },
    #[error("ridge system is singular")]
    SingularSystem,
}

/// Physics-based readout augmentation `K(u_in)`.
pub trait Knowledge: Send + Sync {
    fn out_dim(&self) -> usize;
    fn eval(&self, u_in: &[f64], out: &mut [f64]);
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EsnHyperparams {
    pub sigma_in: f64,
    pub rho: f64,
    pub beta_tik: f64,
    pub b_in: f64,
    pub n_r: usize,
    pub sparseness: f64,
    pub seed: u64,
}

impl EsnHyperparams {
    pub fn validate(&self) -> Result<(), ReservoirError> {
        let bad = |m: &str| Err(ReservoirError::InvalidHyperparams(m.to_string()));
        if !(self.sigma_in > 0.0) {
            return bad("sigma_in must be positive");
        }
        if !(self.rho > 0.0) {
            return bad("rho must be positive");
        }
        if !(self.beta_tik >= 0.0) {
            return bad("beta_tik must be non-negative");
        }
        if !self.b_in.is_finite() {
            return bad("b_in must be finite");
        }
        if self.n_r == 0 {
            return bad("n_r must be at least 1");
        }
        if !(0.0..1.0).contains(&self.sparseness) {
            return bad("sparseness must lie in [0, 1)");
        }
        Ok(())
    }

    pub fn with_point(&self, sigma_in: f64, rho: f64) -> Self {
        Self {
            sigma_in,
            rho,
            ..self.clone()
        }
    }
}

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsrMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        let mut row_ptr = Vec::with_capacity(m.nrows() + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let v = m[(i, j)];
                if v != 0.0 {
                    col_idx.push(j);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self {
            n_rows: m.nrows(),
            n_cols: m.ncols(),
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn nrows(&self) -> usize {
        self.n_rows
    }

    pub fn ncols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_nnz(&self, i: usize) -> usize {
        self.row_ptr[i + 1] - self.row_ptr[i]
    }

    /// `out = self · x`
    #[inline]
    pub fn matvec(&self, x: &[f64], out: &mut [f64]) {
        for i in 0..self.n_rows {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            out[i] = acc;
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for v in &mut self.values {
            *v *= factor;
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n_rows, self.n_cols);
        for i in 0..self.n_rows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                m[(i, self.col_idx[k])] = self.values[k];
            }
        }
        m
    }
}

/// Fixed random matrices of one network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReservoirMatrices {
    /// `n_r × (n_u + 1)`, last column multiplies the input bias.
    pub w_in_hat: DMatrix<f64>,
    /// `n_r × n_r`, unit spectral radius.
    pub w_hat: CsrMatrix,
    pub n_u: usize,
}

impl ReservoirMatrices {
    pub fn n_r(&self) -> usize {
        self.w_hat.nrows()
    }

    /// Builds matrices from explicit dense blocks, without rescaling.
    pub fn from_parts(w_in_hat: DMatrix<f64>, w_hat: &DMatrix<f64>) -> Result<Self, ReservoirError> {
        let n_r = w_hat.nrows();
        if w_hat.ncols() != n_r {
            return Err(ReservoirError::DimensionMismatch {
                expected: n_r,
                got: w_hat.ncols(),
            });
        }
        if w_in_hat.nrows() != n_r || w_in_hat.ncols() < 2 {
            return Err(ReservoirError::DimensionMismatch {
                expected: n_r,
                got: w_in_hat.nrows(),
            });
        }
        Ok(Self {
            n_u: w_in_hat.ncols() - 1,
            w_in_hat,
            w_hat: CsrMatrix::from_dense(w_hat),
        })
    }

    /// Size of the readout state `r̂` for a knowledge term of `k_dim` outputs.
    pub fn n_r_hat(&self, k_dim: usize) -> usize {
        self.n_r() + 1 + k_dim
    }
}

const SPECTRAL_TOL: f64 = 1e-6;
const SPECTRAL_MAX_ITER: usize = 10_000;
const SPECTRAL_ATTEMPTS: usize = 3;

/// Dominant eigenvalue modulus by orthogonal (block power) iteration.
///
/// A block of `min(n, 8)` vectors is iterated and re-orthonormalized; the
/// radius is read off the Ritz values of the projected block. The first start
/// vector is all ones and the others are fixed unit vectors, so the result is
/// deterministic. Returns `None` without convergence.
pub fn spectral_radius(a: &CsrMatrix, tol: f64, max_iter: usize) -> Option<f64> {
    let n = a.nrows();
    if n == 0 {
        return None;
    }
    let p = n.min(8);
    let mut q = DMatrix::<f64>::zeros(n, p);
    q.column_mut(0).fill(1.0);
    for j in 1..p {
        // spread the remaining start vectors over the index range
        q[((j * n) / p, j)] = 1.0;
        q[(((j * n) / p + 1) % n, j)] = -0.5;
    }
    q = q.qr().q();
    let mut aq = DMatrix::<f64>::zeros(n, p);
    let mut prev = f64::NAN;
    let mut settled = 0;
    for _ in 0..max_iter {
        for j in 0..p {
            let src: Vec<f64> = q.column(j).iter().copied().collect();
            let mut dst = vec![0.0; n];
            a.matvec(&src, &mut dst);
            aq.column_mut(j).copy_from_slice(&dst);
        }
        let h = q.transpose() * &aq;
        let radius = h
            .complex_eigenvalues()
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if !radius.is_finite() {
            return None;
        }
        if aq.norm() == 0.0 {
            return Some(0.0);
        }
        if prev.is_finite() && (radius - prev).abs() <= tol * 1e-6 * radius.max(f64::MIN_POSITIVE) {
            settled += 1;
            if settled >= 3 {
                return Some(radius);
            }
        } else {
            settled = 0;
        }
        prev = radius;
        q = aq.clone().qr().q();
    }
    None
}

/// Samples `Ŵ_in` and `Ŵ` for a network, rescaling `Ŵ` to unit spectral
/// radius.
pub fn init_matrices(hp: &EsnHyperparams, n_u: usize) -> Result<ReservoirMatrices, ReservoirError> {
    if n_u == 0 {
        return Err(ReservoirError::InvalidHyperparams("n_u must be at least 1".into()));
    }
    if hp.n_r == 0 || !(0.0..1.0).contains(&hp.sparseness) {
        return Err(ReservoirError::InvalidHyperparams(
            "n_r must be positive and sparseness in [0, 1)".into(),
        ));
    }
    let n_r = hp.n_r;
    for attempt in 0..SPECTRAL_ATTEMPTS {
        let mut rng = seed::rng(seed::derive(hp.seed, seed::stream::MATRICES, attempt as u64));
        let mut w_in_hat = DMatrix::zeros(n_r, n_u + 1);
        for i in 0..n_r {
            let col = rng.random_range(0..=n_u);
            w_in_hat[(i, col)] = rng.random_range(-1.0..=1.0);
        }
        let density = 1.0 - hp.sparseness;
        let mut w = DMatrix::zeros(n_r, n_r);
        for i in 0..n_r {
            for j in 0..n_r {
                if rng.random::<f64>() < density {
                    w[(i, j)] = rng.random_range(-1.0..=1.0);
                }
            }
        }
        let mut w_hat = CsrMatrix::from_dense(&w);
        match spectral_radius(&w_hat, SPECTRAL_TOL, SPECTRAL_MAX_ITER) {
            Some(radius) if radius > 0.0 => {
                w_hat.scale(1.0 / radius);
                return Ok(ReservoirMatrices { w_in_hat, w_hat, n_u });
            }
            _ => continue,
        }
    }
    Err(ReservoirError::SpectralRadiusFailure {
        attempts: SPECTRAL_ATTEMPTS,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReservoirState {
    pub r: Vec<f64>,
}

impl ReservoirState {
    pub fn zeros(n_r: usize) -> Self {
        Self { r: vec![0.0; n_r] }
    }

    /// Readout state `[r; 1; K(u_in)]`.
    pub fn r_hat(&self, u_in: &[f64], knowledge: Option<&dyn Knowledge>) -> Vec<f64> {
        let k_dim = knowledge.map_or(0, |k| k.out_dim());
        let mut out = vec![0.0; self.r.len() + 1 + k_dim];
        fill_r_hat(&self.r, u_in, knowledge, &mut out);
        out
    }
}

#[inline]
fn fill_r_hat(r: &[f64], u_in: &[f64], knowledge: Option<&dyn Knowledge>, out: &mut [f64]) {
    let n = r.len();
    out[..n].copy_from_slice(r);
    out[n] = 1.0;
    if let Some(k) = knowledge {
        k.eval(u_in, &mut out[n + 1..]);
    }
}

/// Workspace for repeated updates of one reservoir.
struct Stepper<'a> {
    mats: &'a ReservoirMatrices,
    sigma_in: f64,
    rho: f64,
    b_in: f64,
    wr: Vec<f64>,
}

impl<'a> Stepper<'a> {
    fn new(mats: &'a ReservoirMatrices, hp: &EsnHyperparams) -> Self {
        Self {
            mats,
            sigma_in: hp.sigma_in,
            rho: hp.rho,
            b_in: hp.b_in,
            wr: vec![0.0; mats.n_r()],
        }
    }

    #[inline]
    fn advance(&mut self, r: &mut [f64], u_in: &[f64]) {
        let w_in = &self.mats.w_in_hat;
        let n_u = self.mats.n_u;
        self.mats.w_hat.matvec(r, &mut self.wr);
        for i in 0..r.len() {
            let mut drive = w_in[(i, n_u)] * self.b_in;
            for (j, u) in u_in.iter().enumerate() {
                drive += w_in[(i, j)] * u;
            }
            r[i] = (self.sigma_in * drive + self.rho * self.wr[i]).tanh();
        }
    }
}

fn check_dim(expected: usize, got: usize) -> Result<(), ReservoirError> {
    if expected != got {
        return Err(ReservoirError::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// One reservoir update driven by `u_in`.
pub fn step(
    mats: &ReservoirMatrices,
    hp: &EsnHyperparams,
    state: &ReservoirState,
    u_in: &[f64],
) -> Result<ReservoirState, ReservoirError> {
    check_dim(mats.n_u, u_in.len())?;
    check_dim(mats.n_r(), state.r.len())?;
    let mut next = state.clone();
    Stepper::new(mats, hp).advance(&mut next.r, u_in);
    Ok(next)
}

/// Teacher-forced run over `inputs` starting from `initial` (zero if
/// `None`).
///
/// Column `j` of the returned matrix is the readout state after consuming
/// input row `washout + j`; it is the regressor for the target row
/// `washout + j + 1`.
pub fn run_open_loop(
    mats: &ReservoirMatrices,
    hp: &EsnHyperparams,
    inputs: SeriesView<'_>,
    washout: usize,
    knowledge: Option<&dyn Knowledge>,
    initial: Option<&ReservoirState>,
) -> Result<(DMatrix<f64>, ReservoirState), ReservoirError> {
    check_dim(mats.n_u, inputs.dim())?;
    if inputs.len() <= washout {
        return Err(ReservoirError::SliceTooShort {
            len: inputs.len(),
            washout,
        });
    }
    let mut state = match initial {
        Some(s) => {
            check_dim(mats.n_r(), s.r.len())?;
            s.clone()
        }
        None => ReservoirState::zeros(mats.n_r()),
    };
    let k_dim = knowledge.map_or(0, |k| k.out_dim());
    let n_hat = mats.n_r_hat(k_dim);
    let mut harvest = DMatrix::zeros(n_hat, inputs.len() - washout);
    let mut stepper = Stepper::new(mats, hp);
    for (i, u) in inputs.rows().enumerate() {
        stepper.advance(&mut state.r, u);
        if i >= washout {
            let mut col = harvest.column_mut(i - washout);
            fill_r_hat(&state.r, u, knowledge, col.as_mut_slice());
        }
    }
    Ok((harvest, state))
}

/// Advances `state` through `inputs` without harvesting.
pub fn drive(
    mats: &ReservoirMatrices,
    hp: &EsnHyperparams,
    inputs: SeriesView<'_>,
    state: &mut ReservoirState,
) -> Result<(), ReservoirError> {
    check_dim(mats.n_u, inputs.dim())?;
    check_dim(mats.n_r(), state.r.len())?;
    let mut stepper = Stepper::new(mats, hp);
    for u in inputs.rows() {
        stepper.advance(&mut state.r, u);
    }
    Ok(())
}

/// Solves `(G + βI) W = C` for the readout, given the state Gram matrix
/// `G = R Rᵀ` and cross term `C = R U_dᵀ`.
///
/// Cholesky is tried first; on failure a diagonal jitter of 1e-12 is added
/// and, failing that, an LU solve is attempted.
pub fn solve_ridge(gram: &DMatrix<f64>, cross: &DMatrix<f64>, beta: f64) -> Result<DMatrix<f64>, ReservoirError> {
    let n = gram.nrows();
    check_dim(n, gram.ncols())?;
    check_dim(n, cross.nrows())?;
    let mut a = gram.clone();
    for i in 0..n {
        a[(i, i)] += beta;
    }
    if let Some(ch) = a.clone().cholesky() {
        let w = ch.solve(cross);
        if w.iter().all(|v| v.is_finite()) {
            return Ok(w);
        }
    }
    for i in 0..n {
        a[(i, i)] += 1e-12;
    }
    if let Some(ch) = a.clone().cholesky() {
        let w = ch.solve(cross);
        if w.iter().all(|v| v.is_finite()) {
            return Ok(w);
        }
    }
    match a.lu().solve(cross) {
        Some(w) if w.iter().all(|v| v.is_finite()) => Ok(w),
        _ => Err(ReservoirError::SingularSystem),
    }
}

/// Ridge regression readout: `W_out = (R Rᵀ + βI)⁻¹ R U_dᵀ`.
///
/// `r` is `N_r̂ × N_tr`, `u_d` is `N_u × N_tr`; the result is `N_r̂ × N_u`.
pub fn train_ridge(r: &DMatrix<f64>, u_d: &DMatrix<f64>, beta: f64) -> Result<DMatrix<f64>, ReservoirError> {
    check_dim(r.ncols(), u_d.ncols())?;
    if r.ncols() == 0 {
        return Err(ReservoirError::SliceTooShort { len: 0, washout: 0 });
    }
    let gram = r * r.transpose();
    let cross = r * u_d.transpose();
    solve_ridge(&gram, &cross, beta)
}

/// Stacks the rows of `targets` as columns (`N_u × len`).
pub fn targets_matrix(targets: SeriesView<'_>) -> DMatrix<f64> {
    DMatrix::from_column_slice(targets.dim(), targets.len(), targets.as_slice())
}

#[inline]
fn readout(w_out: &DMatrix<f64>, r_hat: &[f64], out: &mut [f64]) {
    for (j, o) in out.iter_mut().enumerate() {
        let col = w_out.column(j);
        let mut acc = 0.0;
        for (a, b) in col.iter().zip(r_hat) {
            acc += a * b;
        }
        *o = acc;
    }
}

/// Applies the readout to a single readout state.
pub fn predict_one(w_out: &DMatrix<f64>, r_hat: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; w_out.ncols()];
    readout(w_out, r_hat, &mut out);
    out
}

/// Autonomous prediction.
///
/// `state` is the reservoir before consuming `u_start` (the last observed
/// data point). Each step feeds the current input, reads out the next
/// value and feeds it back. Returns `n_steps` predictions.
pub fn run_closed_loop(
    mats: &ReservoirMatrices,
    hp: &EsnHyperparams,
    w_out: &DMatrix<f64>,
    state: &ReservoirState,
    u_start: &[f64],
    n_steps: usize,
    knowledge: Option<&dyn Knowledge>,
) -> Result<Trajectory, ReservoirError> {
    check_dim(mats.n_u, u_start.len())?;
    check_dim(mats.n_r(), state.r.len())?;
    let k_dim = knowledge.map_or(0, |k| k.out_dim());
    let n_hat = mats.n_r_hat(k_dim);
    check_dim(n_hat, w_out.nrows())?;
    check_dim(mats.n_u, w_out.ncols())?;
    let mut out = Trajectory::with_capacity(mats.n_u, n_steps);
    let mut r = state.r.clone();
    let mut u = u_start.to_vec();
    let mut r_hat = vec![0.0; n_hat];
    let mut stepper = Stepper::new(mats, hp);
    for _ in 0..n_steps {
        stepper.advance(&mut r, &u);
        fill_r_hat(&r, &u, knowledge, &mut r_hat);
        readout(w_out, &r_hat, &mut u);
        out.push_row(&u);
    }
    Ok(out)
}

/// Self-describing trained network blob.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedNetwork {
    pub hp: EsnHyperparams,
    pub matrices: ReservoirMatrices,
    pub w_out: DMatrix<f64>,
    /// Output dimension of the knowledge term the readout was trained with.
    pub knowledge_dim: usize,
}

impl TrainedNetwork {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("network serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hp(n_r: usize, s: f64, seed: u64) -> EsnHyperparams {
        EsnHyperparams {
            sigma_in: 1.0,
            rho: 0.9,
            beta_tik: 1e-6,
            b_in: 1.0,
            n_r,
            sparseness: s,
            seed,
        }
    }

    #[test]
    fn input_matrix_has_one_nonzero_per_row() {
        let m = init_matrices(&hp(100, 0.97, 3), 3).unwrap();
        for i in 0..100 {
            let nz = m.w_in_hat.row(i).iter().filter(|v| **v != 0.0).count();
            assert_eq!(nz, 1);
            assert!(m.w_in_hat.row(i).iter().all(|v| v.abs() <= 1.0));
        }
    }

    #[test]
    fn sparse_reservoir_density() {
        let m = init_matrices(&hp(100, 0.97, 11), 3).unwrap();
        let avg = m.w_hat.nnz() as f64 / 100.0;
        assert!((avg - 3.0).abs() <= 1.0, "avg nonzeros per row {avg}");
    }

    #[test]
    fn seeded_matrices_identical() {
        let a = init_matrices(&hp(50, 0.9, 5), 3).unwrap();
        let b = init_matrices(&hp(50, 0.9, 5), 3).unwrap();
        assert_eq!(a, b);
        let c = init_matrices(&hp(50, 0.9, 6), 3).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn two_by_two_radius_closed_form() {
        for seed in 0..20 {
            let m = init_matrices(&hp(2, 0.0, seed), 1).unwrap();
            let d = m.w_hat.to_dense();
            let (a, b, c, e) = (d[(0, 0)], d[(0, 1)], d[(1, 0)], d[(1, 1)]);
            let tr = a + e;
            let det = a * e - b * c;
            let disc = tr * tr / 4.0 - det;
            let radius = if disc >= 0.0 {
                (tr / 2.0 + disc.sqrt()).abs().max((tr / 2.0 - disc.sqrt()).abs())
            } else {
                det.sqrt()
            };
            assert!((radius - 1.0).abs() < 1e-6, "seed {seed}: {radius}");
        }
    }

    #[test]
    fn zero_input_zero_state_stays_zero() {
        let mut p = hp(10, 0.5, 1);
        p.b_in = 0.0;
        let m = init_matrices(&p, 3).unwrap();
        let s = step(&m, &p, &ReservoirState::zeros(10), &[0.0; 3]).unwrap();
        assert!(s.r.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn hand_built_step() {
        let w_in = DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, -0.25]);
        let w = DMatrix::from_row_slice(2, 2, &[0.0, 0.8, -0.6, 0.0]);
        let m = ReservoirMatrices::from_parts(w_in, &w).unwrap();
        let p = EsnHyperparams {
            sigma_in: 2.0,
            rho: 0.5,
            beta_tik: 0.0,
            b_in: 1.0,
            n_r: 2,
            sparseness: 0.0,
            seed: 0,
        };
        let s = ReservoirState { r: vec![0.1, -0.2] };
        let next = step(&m, &p, &s, &[0.3]).unwrap();
        let e0 = (2.0_f64 * 0.5 * 0.3 + 0.5 * (0.8 * -0.2)).tanh();
        let e1 = (2.0_f64 * -0.25 * 1.0 + 0.5 * (-0.6 * 0.1)).tanh();
        assert!((next.r[0] - e0).abs() < 1e-14);
        assert!((next.r[1] - e1).abs() < 1e-14);
    }

    #[test]
    fn dimension_mismatch_detected() {
        let p = hp(5, 0.5, 2);
        let m = init_matrices(&p, 3).unwrap();
        assert!(matches!(
            step(&m, &p, &ReservoirState::zeros(5), &[0.0; 2]),
            Err(ReservoirError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn identity_ridge() {
        let i = DMatrix::<f64>::identity(2, 2);
        let w = train_ridge(&i, &i, 0.0).unwrap();
        assert!((w - i).norm() < 1e-15);
    }

    #[test]
    fn closed_loop_zero_steps_is_empty() {
        let p = hp(5, 0.5, 2);
        let m = init_matrices(&p, 3).unwrap();
        let w = DMatrix::zeros(6, 3);
        let out = run_closed_loop(&m, &p, &w, &ReservoirState::zeros(5), &[0.0; 3], 0, None).unwrap();
        assert!(out.is_empty());
    }

    #[test]
    fn network_blob_round_trip() {
        let p = hp(8, 0.5, 9);
        let m = init_matrices(&p, 3).unwrap();
        let net = TrainedNetwork {
            hp: p,
            matrices: m,
            w_out: DMatrix::from_fn(9, 3, |i, j| (i * 3 + j) as f64 * 0.1),
            knowledge_dim: 0,
        };
        let back = TrainedNetwork::from_json(&net.to_json()).unwrap();
        assert_eq!(back, net);
    }
}
