use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pmix::config::{ConfigError, ExperimentConfig, Kind, Overrides};
use pmix::executor::RayonExecutor;
use pmix::experiments::{self, RunError};
use pmix::plot::{plot_data, write_plot, PlotKind};

const CONFIG_ERROR: u8 = 2;
const RUNTIME_ERROR: u8 = 3;

/// Monte Carlo experiments for mixed Poisson and Gaussian approximation of
/// Poisson functionals.
#[derive(Parser)]
#[command(name = "pmix", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write CSV tables and a manifest.
    Run {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        replicates: Option<u64>,
        /// Output directory (overrides the config's `output`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Emit long-format plot data from a results directory or CSV.
    PlotData {
        results: PathBuf,
        #[arg(long)]
        kind: String,
        /// Write to this file instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parse and check a config without running it.
    ValidateConfig { config: PathBuf },
    /// List the experiment kinds.
    ListExperiments,
}

fn load(path: &Path, o: &Overrides) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg = ExperimentConfig::from_path(path)?;
    cfg.apply(o)?;
    experiments::plan(&cfg)?;
    Ok(cfg)
}

fn fail(code: u8, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, seed, replicates, out } => {
            let o = Overrides { seed, replicates, output: out };
            let cfg = match load(&config, &o) {
                Ok(c) => c,
                Err(e) => return fail(CONFIG_ERROR, e),
            };
            let exec = match RayonExecutor::from_env() {
                Ok(e) => e,
                Err(e) => return fail(CONFIG_ERROR, e),
            };
            let dir = pmix::output_dir(&cfg);
            match pmix::run_to_dir(&cfg, &dir, &exec) {
                Ok(files) => {
                    for f in files {
                        println!("{}", f.display());
                    }
                    ExitCode::SUCCESS
                }
                Err(RunError::Config(e)) => fail(CONFIG_ERROR, e),
                Err(e) => fail(RUNTIME_ERROR, e),
            }
        }
        Command::PlotData { results, kind, out } => {
            let Some(kind) = PlotKind::parse(&kind) else {
                let names: Vec<_> = PlotKind::ALL.iter().map(|k| k.name()).collect();
                return fail(CONFIG_ERROR, format!("unknown plot kind {kind:?}; expected one of {}", names.join(", ")));
            };
            let table = match plot_data(&results, kind) {
                Ok(t) => t,
                Err(e) => return fail(RUNTIME_ERROR, format!("{e:#}")),
            };
            let written = match out {
                Some(p) => std::fs::File::create(&p).map_err(anyhow::Error::from).and_then(|f| write_plot(&table, f)),
                None => write_plot(&table, std::io::stdout().lock()),
            };
            match written {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => fail(RUNTIME_ERROR, format!("{e:#}")),
            }
        }
        Command::ValidateConfig { config } => match load(&config, &Overrides::default()) {
            Ok(c) => {
                println!("ok: {} (seed {}, {} replicates)", c.kind.name(), c.seed, c.replicates);
                ExitCode::SUCCESS
            }
            Err(e) => fail(CONFIG_ERROR, e),
        },
        Command::ListExperiments => {
            for k in Kind::ALL {
                println!("{:<14} {}", k.name(), k.description());
            }
            ExitCode::SUCCESS
        }
    }
}
