//! Configuration-driven experiment runner for `pmix-core`.
//!
//! A run reads a JSON [`config::ExperimentConfig`], executes it on a
//! [`executor::RayonExecutor`] and writes CSV tables plus a JSON manifest.
//! Identical configuration and seed give byte-identical CSV files for any
//! thread count.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod executor;
pub mod experiments;
pub mod output;
pub mod plot;

use std::path::{Path, PathBuf};
use std::time::Instant;

use config::ExperimentConfig;
use executor::RayonExecutor;
use experiments::RunError;
use output::{write_run, RunInfo};

/// Default output directory when neither the config nor `--out` sets one.
pub const DEFAULT_OUTPUT: &str = "results";

pub fn output_dir(cfg: &ExperimentConfig) -> PathBuf {
    cfg.output.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT))
}

/// Runs `cfg` and writes its artifacts into `dir`. Nothing is left on disk
/// when any step fails.
pub fn run_to_dir(cfg: &ExperimentConfig, dir: &Path, exec: &RayonExecutor) -> Result<Vec<PathBuf>, RunError> {
    let start = Instant::now();
    let out = experiments::run(cfg, exec)?;
    let echo = cfg.echo();
    let info = RunInfo {
        kind: cfg.kind.name(),
        seed: cfg.seed,
        threads: exec.threads(),
        wall_time_seconds: start.elapsed().as_secs_f64(),
        config: &echo,
    };
    write_run(dir, &out, &info).map_err(RunError::Runtime)
}
