//! One runner per experiment kind.
//!
//! Each runner is split into a plan step, which turns parameters into core
//! objects and reports failures as configuration errors, and an execute
//! step, whose failures are runtime errors.

mod chaos;
mod coefficients;
mod graph;
mod stein;
mod ustat;

use pmix_core::exec::Executor;

use crate::config::{ConfigError, ExperimentConfig, Params};
use crate::output::RunOutput;

pub use coefficients::{report_json, COEFFICIENT_COLUMNS};
pub use graph::MIXED_COLUMNS;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0:#}")]
    Runtime(anyhow::Error),
}

pub enum Plan {
    Coefficients(coefficients::Plan),
    GraphMixed(graph::Plan),
    UstatBounds(ustat::Plan),
    SteinVerify(stein::Plan),
    ChaosVerify(chaos::Plan),
}

/// Builds every core object the run needs without sampling anything.
pub fn plan(cfg: &ExperimentConfig) -> Result<Plan, ConfigError> {
    Ok(match &cfg.params {
        Params::Coefficients(p) => Plan::Coefficients(coefficients::plan(cfg, p)?),
        Params::GraphMixed(p) => Plan::GraphMixed(graph::plan(cfg, p)?),
        Params::UstatBounds(p) => Plan::UstatBounds(ustat::plan(cfg, p)?),
        Params::SteinVerify(p) => Plan::SteinVerify(stein::plan(cfg, p)?),
        Params::ChaosVerify(p) => Plan::ChaosVerify(chaos::plan(cfg, p)?),
    })
}

impl Plan {
    pub fn execute<E: Executor>(&self, exec: &E) -> anyhow::Result<RunOutput> {
        match self {
            Plan::Coefficients(p) => p.execute(exec),
            Plan::GraphMixed(p) => p.execute(exec),
            Plan::UstatBounds(p) => p.execute(exec),
            Plan::SteinVerify(p) => p.execute(exec),
            Plan::ChaosVerify(p) => p.execute(exec),
        }
    }
}

pub fn run<E: Executor>(cfg: &ExperimentConfig, exec: &E) -> Result<RunOutput, RunError> {
    plan(cfg)?.execute(exec).map_err(RunError::Runtime)
}

fn core_err(field: &str) -> impl Fn(pmix_core::Error) -> ConfigError + '_ {
    move |e| ConfigError::invalid(field, e.to_string())
}
