//! Echo state networks for chaotic time series, together with the
//! validation strategies and hyperparameter optimizers used to tune them.
//!
//! The crate is organised bottom-up:
//!
//! - [`dynamics`]: Lorenz and Kuznetsov systems, Euler integration, datasets.
//! - [`reservoir`]: matrix construction, open/closed loop and ridge readout.
//! - [`knowledge`]: physics-based readout augmentations (POD Galerkin, partial
//!   Euler step).
//! - [`validation`]: fold schedules and the mean log10 MSE objective.
//! - [`hpo`]: grid search and Gaussian-process Bayesian optimization.
//! - [`metrics`]: MSE, prediction horizon, rank correlation, aggregates.

pub mod dynamics;
pub mod hpo;
pub mod knowledge;
pub mod metrics;
pub mod reservoir;
pub mod seed;
pub mod series;
pub mod validation;

pub use series::{SeriesView, Trajectory};
