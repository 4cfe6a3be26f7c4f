//! Bayesian optimization with a GP surrogate and the gp-hedge portfolio.

use super::acquisition::{acquisitions, Acquisition, HedgeState};
use super::gp::{gp_fit_from, GpError, GpSurrogate, Matern52};
use super::simplex::nelder_mead;
use super::{argmin, unit_lattice, Point, SearchSpace};
use crate::seed;
use crate::validation::LOG_MSE_CAP;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoConfig {
    /// Starting lattice points per dimension.
    pub n_start: [usize; 2],
    pub n_acquire: usize,
    /// Lattice resolution of the acquisition scan, per dimension.
    pub lattice: usize,
    pub polish_iters: usize,
    pub eta: f64,
    pub kappa: f64,
    /// Value recorded when the objective fails.
    pub failure_value: f64,
}

impl Default for BoConfig {
    fn default() -> Self {
        Self {
            n_start: [5, 5],
            n_acquire: 24,
            lattice: 100,
            polish_iters: 50,
            eta: 1.0,
            kappa: 1.96,
            failure_value: LOG_MSE_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub iteration: usize,
    pub unit: Point,
    pub point: Point,
    pub value: f64,
    /// Acquisition that proposed the point; `None` for starting points.
    pub acquisition: Option<Acquisition>,
    /// Hedge probabilities at selection time.
    pub probabilities: Option<[f64; 3]>,
    pub failed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoResult {
    pub best_point: Point,
    pub best_value: f64,
    pub best_iteration: usize,
    pub trace: Vec<TraceEntry>,
    pub final_gains: [f64; 3],
}

const DUPLICATE_RADIUS: f64 = 1e-6;

fn near_any(p: &Point, xs: &[Point]) -> bool {
    xs.iter().any(|q| (p[0] - q[0]).hypot(p[1] - q[1]) < DUPLICATE_RADIUS)
}

/// Best lattice point of each acquisition, refined by a short Nelder–Mead
/// polish. Points within 1e-6 of existing data are never proposed.
fn propose(gp: &GpSurrogate, lattice: &[Point], best_y: f64, cfg: &BoConfig) -> [Point; 3] {
    let data = gp.x_train();
    let mut best: [Option<(f64, Point)>; 3] = [None; 3];
    for p in lattice {
        if near_any(p, data) {
            continue;
        }
        let (m, s) = gp.posterior(p);
        let a = acquisitions(m, s, best_y, cfg.kappa);
        for (slot, acq) in best.iter_mut().zip(Acquisition::ALL) {
            let v = a.get(acq);
            if slot.is_none_or(|(b, _)| v > b) {
                *slot = Some((v, *p));
            }
        }
    }
    let mut out = [[0.5, 0.5]; 3];
    for (k, acq) in Acquisition::ALL.iter().enumerate() {
        let (v0, p0) = best[k].expect("lattice has free points");
        let score = |x: &[f64]| {
            let p = [x[0], x[1]];
            let (m, s) = gp.posterior(&p);
            -acquisitions(m, s, best_y, cfg.kappa).get(*acq)
        };
        let step = 1.0 / (cfg.lattice.max(2) - 1) as f64;
        let r = nelder_mead(score, &p0, step, &[0.0, 0.0], &[1.0, 1.0], cfg.polish_iters, 0.0);
        let polished = [r.x[0], r.x[1]];
        out[k] = if -r.value > v0 && !near_any(&polished, data) { polished } else { p0 };
    }
    out
}

/// Minimizes `objective` over `space`: a starting lattice followed by
/// `n_acquire` hedged GP acquisitions. Failed evaluations are recorded at
/// `cfg.failure_value`.
pub fn bayesian_optimize<E, F>(mut objective: F, space: &SearchSpace, cfg: &BoConfig, seed: u64) -> Result<BoResult, GpError>
where
    F: FnMut(Point) -> Result<f64, E>,
{
    let mut trace: Vec<TraceEntry> = Vec::new();
    let mut evaluate = |unit: Point, trace: &mut Vec<TraceEntry>, acq: Option<(Acquisition, [f64; 3])>| {
        let point = space.from_unit(unit);
        let (value, failed) = match objective(point) {
            Ok(v) if v.is_finite() => (v, false),
            _ => (cfg.failure_value, true),
        };
        trace.push(TraceEntry {
            iteration: trace.len(),
            unit,
            point,
            value,
            acquisition: acq.map(|a| a.0),
            probabilities: acq.map(|a| a.1),
            failed,
        });
    };
    for unit in unit_lattice(cfg.n_start) {
        evaluate(unit, &mut trace, None);
    }

    let lattice = unit_lattice([cfg.lattice, cfg.lattice]);
    let mut rng = seed::rng(seed::derive(seed, seed::stream::BAYES, 0));
    let mut hedge = HedgeState::new(cfg.eta);
    let mut previous: Option<[Point; 3]> = None;
    let mut kernel: Option<Matern52> = None;
    for it in 0..cfg.n_acquire {
        let xs: Vec<Point> = trace.iter().map(|t| t.unit).collect();
        let ys: Vec<f64> = trace.iter().map(|t| t.value).collect();
        let gp = gp_fit_from(&xs, &ys, seed::derive(seed, seed::stream::BAYES, 1 + it as u64), kernel)?;
        kernel = Some(*gp.kernel());
        if let Some(cands) = previous {
            hedge.reward(cands.map(|c| -gp.mean(&c)));
        }
        let best_y = argmin(ys.iter().copied()).expect("nonempty").1;
        let cands = propose(&gp, &lattice, best_y, cfg);
        let probs = hedge.probabilities();
        let chosen = hedge.select(rng.random::<f64>());
        let k = Acquisition::ALL.iter().position(|a| *a == chosen).expect("known acquisition");
        evaluate(cands[k], &mut trace, Some((chosen, probs)));
        previous = Some(cands);
    }

    let (best_iteration, best_value) = argmin(trace.iter().map(|t| t.value)).expect("nonempty trace");
    Ok(BoResult {
        best_point: trace[best_iteration].point,
        best_value,
        best_iteration,
        trace,
        final_gains: hedge.gains,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hpo::{grid_search, Dimension};
    use std::convert::Infallible;

    fn space() -> SearchSpace {
        SearchSpace::new([Dimension::linear(0.5, 5.0), Dimension::linear(0.1, 1.0)]).unwrap()
    }

    #[test]
    fn no_acquisitions_equals_start_grid() {
        let f = |p: Point| (p[0] - 2.0).powi(2) + (p[1] - 0.4).powi(2);
        let cfg = BoConfig {
            n_acquire: 0,
            ..BoConfig::default()
        };
        let bo = bayesian_optimize(|p| Ok::<_, Infallible>(f(p)), &space(), &cfg, 1).unwrap();
        let gs = grid_search::<Infallible, _>(|p| Ok(f(p)), &space(), [5, 5]).unwrap();
        assert_eq!(bo.best_point, gs.best_point);
        assert_eq!(bo.best_value, gs.best_value);
        let bo_values: Vec<f64> = bo.trace.iter().map(|t| t.value).collect();
        let gs_values: Vec<f64> = gs.table.iter().map(|e| e.value).collect();
        assert_eq!(bo_values, gs_values);
    }

    #[test]
    fn failures_recorded_at_cap() {
        let cfg = BoConfig {
            n_acquire: 2,
            lattice: 20,
            ..BoConfig::default()
        };
        let r = bayesian_optimize(
            |p: Point| if p[0] > 4.0 { Err("diverged") } else { Ok(p[0] + p[1]) },
            &space(),
            &cfg,
            3,
        )
        .unwrap();
        assert!(r.trace.iter().any(|t| t.failed && t.value == LOG_MSE_CAP));
        assert_eq!(r.trace.len(), 27);
    }
}
