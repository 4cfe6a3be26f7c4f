//! Experiment harness: ensemble runs, studies and exports on top of
//! `esnlab-core`.

pub mod config;
pub mod experiment;
pub mod export;
pub mod study;

use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error(transparent)]
    Dynamics(#[from] esnlab_core::dynamics::DynamicsError),
    #[error(transparent)]
    Reservoir(#[from] esnlab_core::reservoir::ReservoirError),
    #[error(transparent)]
    Validation(#[from] esnlab_core::validation::ValidationError),
    #[error(transparent)]
    Knowledge(#[from] esnlab_core::knowledge::KnowledgeError),
    #[error(transparent)]
    Metrics(#[from] esnlab_core::metrics::MetricsError),
    #[error(transparent)]
    Test(#[from] esnlab_core::metrics::TestError),
    #[error(transparent)]
    Gp(#[from] esnlab_core::hpo::GpError),
}

impl HarnessError {
    /// Short machine-readable kind, used in the CLI error summary.
    pub fn kind(&self) -> &'static str {
        match self {
            HarnessError::Config(_) => "config",
            HarnessError::Io { .. } => "io",
            HarnessError::Format { .. } => "format",
            HarnessError::Dynamics(_) => "dynamics",
            HarnessError::Reservoir(_) => "reservoir",
            HarnessError::Validation(_) => "validation",
            HarnessError::Knowledge(_) => "knowledge",
            HarnessError::Metrics(_) => "metrics",
            HarnessError::Test(_) => "test",
            HarnessError::Gp(_) => "gp",
        }
    }
}

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> HarnessError {
    let path = path.into();
    move |source| HarnessError::Io { path, source }
}
