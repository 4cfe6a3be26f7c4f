//! Knowledge functions that augment the readout state of a hybrid ESN.
//!
//! Two kinds are provided: a flat Galerkin projection of the full equations
//! onto the leading POD modes, and a single forward Euler step of the
//! Kuznetsov `y` equation. Both receive inputs in the normalized network
//! frame and return outputs in that frame.

use crate::dynamics::{NormRecord, OdeSystem, SystemKind, VectorField};
use crate::reservoir::Knowledge;
use crate::series::SeriesView;
use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KnowledgeError {
    #[error("need at least two snapshots, got {0}")]
    TooFewSnapshots(usize),
    #[error("requested {requested} modes, but only {rank} are numerically nonzero")]
    RankDeficient { requested: usize, rank: usize },
    #[error("invalid mode count {n_pod} for {n_u} components")]
    InvalidModeCount { n_pod: usize, n_u: usize },
    #[error("knowledge function requires a {0:?} system")]
    WrongSystem(SystemKind),
}

/// Leading POD modes of a snapshot set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PodModel {
    /// `N_u × n_pod`, orthonormal columns.
    pub phi: DMatrix<f64>,
    /// Snapshot mean.
    pub d: Vec<f64>,
    /// All covariance eigenvalues, descending.
    pub energies: Vec<f64>,
    pub n_pod: usize,
    /// Step of the Galerkin Euler update.
    pub dt: f64,
}

impl PodModel {
    pub fn energy_fraction(&self) -> f64 {
        captured_fraction(&self.energies, self.n_pod)
    }

    /// `ξ = Φᵀ (u − d)`
    pub fn project(&self, u: &[f64]) -> Vec<f64> {
        (0..self.n_pod)
            .map(|m| {
                self.phi
                    .column(m)
                    .iter()
                    .zip(u.iter().zip(&self.d))
                    .map(|(p, (x, d))| p * (x - d))
                    .sum()
            })
            .collect()
    }

    /// `u = Φ ξ + d`
    pub fn lift(&self, xi: &[f64]) -> Vec<f64> {
        let mut u = self.d.clone();
        for (m, x) in xi.iter().enumerate() {
            for (ui, p) in u.iter_mut().zip(self.phi.column(m).iter()) {
                *ui += p * x;
            }
        }
        u
    }
}

/// Fraction of the total energy held by the first `n` eigenvalues.
pub fn captured_fraction(energies: &[f64], n: usize) -> f64 {
    let total: f64 = energies.iter().map(|e| e.max(0.0)).sum();
    if total <= 0.0 {
        return 0.0;
    }
    let head: f64 = energies.iter().take(n).map(|e| e.max(0.0)).sum();
    (head / total).clamp(0.0, 1.0)
}

/// POD of `snapshots` (rows are time instants): eigen-decomposition of the
/// covariance `C = Uᵀ U / (M − 1)` of the mean-subtracted data.
///
/// Modes are sorted by decreasing energy and signed so that their first
/// nonzero component is positive.
pub fn compute_pod(snapshots: SeriesView<'_>, n_pod: usize, dt: f64) -> Result<PodModel, KnowledgeError> {
    let m = snapshots.len();
    let n_u = snapshots.dim();
    if m < 2 {
        return Err(KnowledgeError::TooFewSnapshots(m));
    }
    if n_pod == 0 || n_pod > n_u {
        return Err(KnowledgeError::InvalidModeCount { n_pod, n_u });
    }
    let mut d = vec![0.0; n_u];
    for row in snapshots.rows() {
        for (dj, x) in d.iter_mut().zip(row) {
            *dj += x;
        }
    }
    for dj in &mut d {
        *dj /= m as f64;
    }
    let mut c = DMatrix::<f64>::zeros(n_u, n_u);
    for row in snapshots.rows() {
        for i in 0..n_u {
            let ai = row[i] - d[i];
            for j in i..n_u {
                c[(i, j)] += ai * (row[j] - d[j]);
            }
        }
    }
    for i in 0..n_u {
        for j in i..n_u {
            let v = c[(i, j)] / (m - 1) as f64;
            c[(i, j)] = v;
            c[(j, i)] = v;
        }
    }
    let eig = SymmetricEigen::new(c);
    let mut order: Vec<usize> = (0..n_u).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let energies: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let max = energies[0].max(0.0);
    let rank = energies.iter().filter(|e| **e >= 1e-14 * max && **e > 0.0).count();
    if n_pod > rank {
        return Err(KnowledgeError::RankDeficient { requested: n_pod, rank });
    }
    let mut phi = DMatrix::<f64>::zeros(n_u, n_pod);
    for (col, &k) in order.iter().take(n_pod).enumerate() {
        let v = eig.eigenvectors.column(k);
        let scale = v.amax();
        let lead = v.iter().find(|x| x.abs() > 1e-12 * scale).copied().unwrap_or(1.0);
        let sign = if lead < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n_u {
            phi[(i, col)] = sign * v[i];
        }
    }
    Ok(PodModel {
        phi,
        d,
        energies,
        n_pod,
        dt,
    })
}

/// One Euler step of the Galerkin system `ξ̇ = Φᵀ f(Φ ξ + d)` from the
/// projection of `u_in`.
pub fn pod_knowledge<F: VectorField + ?Sized>(pod: &PodModel, field: &F, u_in: &[f64]) -> Vec<f64> {
    let xi = pod.project(u_in);
    let q = pod.lift(&xi);
    let mut f = vec![0.0; q.len()];
    field.rhs(&q, &mut f);
    xi.iter()
        .enumerate()
        .map(|(m, x)| {
            let dx: f64 = pod.phi.column(m).iter().zip(&f).map(|(p, fi)| p * fi).sum();
            x + pod.dt * dx
        })
        .collect()
}

/// Forward Euler update of the Kuznetsov `y` equation in physical units:
/// `y + dt (y (λ + z + x² − x⁴/2) − ω₀² x)`.
pub fn fe_knowledge(system: &OdeSystem, dt: f64, u_in: &[f64]) -> Result<f64, KnowledgeError> {
    if system.kind != SystemKind::Kuznetsov {
        return Err(KnowledgeError::WrongSystem(SystemKind::Kuznetsov));
    }
    let [lambda, omega0, _] = system.params;
    let (x, y, z) = (u_in[0], u_in[1], u_in[2]);
    let x2 = x * x;
    Ok(y + dt * (y * (lambda + z + x2 - 0.5 * x2 * x2) - omega0 * omega0 * x))
}

/// The vector field of `system` expressed in normalized coordinates:
/// `f̃(u) = f(u ∘ s + o) / s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedField {
    pub system: OdeSystem,
    pub norm: NormRecord,
}

impl VectorField for NormalizedField {
    fn dim(&self) -> usize {
        self.system.state_dim()
    }

    fn rhs(&self, u: &[f64], out: &mut [f64]) {
        let mut q = [0.0; 3];
        self.norm.to_physical(u, &mut q);
        self.system.rhs(&q, out);
        for (o, s) in out.iter_mut().zip(&self.norm.scales) {
            *o /= s;
        }
    }
}

/// Knowledge term attached to a hybrid network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum KnowledgeFn {
    PodGalerkin { pod: PodModel, field: NormalizedField },
    ForwardEulerY { system: OdeSystem, dt: f64, norm: NormRecord },
}

impl KnowledgeFn {
    /// POD Galerkin knowledge built from the normalized `snapshots`.
    pub fn pod_galerkin(
        snapshots: SeriesView<'_>,
        n_pod: usize,
        dt: f64,
        system: OdeSystem,
        norm: NormRecord,
    ) -> Result<Self, KnowledgeError> {
        let pod = compute_pod(snapshots, n_pod, dt)?;
        Ok(KnowledgeFn::PodGalerkin {
            pod,
            field: NormalizedField { system, norm },
        })
    }

    pub fn forward_euler_y(system: OdeSystem, dt: f64, norm: NormRecord) -> Result<Self, KnowledgeError> {
        if system.kind != SystemKind::Kuznetsov {
            return Err(KnowledgeError::WrongSystem(SystemKind::Kuznetsov));
        }
        Ok(KnowledgeFn::ForwardEulerY { system, dt, norm })
    }
}

impl Knowledge for KnowledgeFn {
    fn out_dim(&self) -> usize {
        match self {
            KnowledgeFn::PodGalerkin { pod, .. } => pod.n_pod,
            KnowledgeFn::ForwardEulerY { .. } => 1,
        }
    }

    fn eval(&self, u_in: &[f64], out: &mut [f64]) {
        match self {
            KnowledgeFn::PodGalerkin { pod, field } => {
                out.copy_from_slice(&pod_knowledge(pod, field, u_in));
            }
            KnowledgeFn::ForwardEulerY { system, dt, norm } => {
                let mut q = [0.0; 3];
                norm.to_physical(u_in, &mut q);
                let y = fe_knowledge(system, *dt, &q).expect("system checked at construction");
                out[0] = (y - norm.offsets[1]) / norm.scales[1];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::Trajectory;

    struct Zero;
    impl VectorField for Zero {
        fn dim(&self) -> usize {
            3
        }
        fn rhs(&self, _q: &[f64], out: &mut [f64]) {
            out.fill(0.0);
        }
    }

    fn line_snapshots() -> Trajectory {
        let dir = [1.0, -2.0, 0.5];
        let rows: Vec<Vec<f64>> = (0..20)
            .map(|k| {
                let t = k as f64 * 0.3 - 2.0;
                vec![3.0 + t * dir[0], -1.0 + t * dir[1], 0.2 + t * dir[2]]
            })
            .collect();
        Trajectory::from_rows(&rows).unwrap()
    }

    #[test]
    fn rank_one_data_full_energy() {
        let t = line_snapshots();
        let pod = compute_pod(t.full_view(), 1, 0.01).unwrap();
        assert!((pod.energy_fraction() - 1.0).abs() < 1e-10);
        assert!(matches!(
            compute_pod(t.full_view(), 2, 0.01),
            Err(KnowledgeError::RankDeficient { requested: 2, rank: 1 })
        ));
    }

    #[test]
    fn zero_field_returns_projection() {
        let t = line_snapshots();
        let pod = compute_pod(t.full_view(), 1, 0.05).unwrap();
        let u = [0.3, 0.1, -0.7];
        assert_eq!(pod_knowledge(&pod, &Zero, &u), pod.project(&u));
    }

    #[test]
    fn fe_examples() {
        let k = OdeSystem::kuznetsov(0.9);
        assert_eq!(fe_knowledge(&k, 0.05, &[0.0, 0.0, 0.0]).unwrap(), 0.0);
        let v = fe_knowledge(&k, 0.05, &[1.0, 1.0, 0.0]).unwrap();
        assert!((v - 0.6605).abs() < 1e-12, "{v}");
        assert_eq!(fe_knowledge(&k, 0.0, &[0.4, -1.3, 2.0]).unwrap(), -1.3);
        assert!(fe_knowledge(&OdeSystem::lorenz(), 0.05, &[0.0; 3]).is_err());
    }

    #[test]
    fn normalized_field_identity_norm_matches_system() {
        let sys = OdeSystem::lorenz();
        let f = NormalizedField {
            system: sys.clone(),
            norm: NormRecord::identity(3),
        };
        let q = [1.0, 2.0, 3.0];
        let mut a = [0.0; 3];
        let mut b = [0.0; 3];
        f.rhs(&q, &mut a);
        sys.rhs(&q, &mut b);
        assert_eq!(a, b);
    }
}
