//! Command-line front end: `fit`, `benchmark` and `synth`.
//!
//! Exit codes: 0 on success, 2 for configuration or input errors, 3 when a
//! solver aborted. Progress goes to standard error; results go to files only.

mod commands;
pub mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

pub use config::{apply_setting, ConfigError, ConfigFile};

/// Environment variable capping the worker threads used by `benchmark`.
pub const THREADS_ENV: &str = "SCAS_THREADS";

#[derive(Debug, Parser)]
#[command(name = "scas-admm", version, about = "Stochastic ADMM solvers and benchmark harness")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tune and run one method on one train/test split.
    Fit(FitArgs),
    /// Run the repeated multi-method comparison.
    Benchmark(BenchmarkArgs),
    /// Write a synthetic LIBSVM dataset plus a JSON sidecar.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// One of batch, stoc, sa, scas.
    #[arg(long)]
    pub method: String,
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: f64,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub passes: Option<f64>,
    /// CSV output; the JSON summary is written next to it.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub mu: Option<f64>,
    /// Use the strongly convex SCAS variant (needs --mu > 0).
    #[arg(long)]
    pub strong: bool,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Comma-separated subset of batch, stoc, sa, scas.
    #[arg(long)]
    pub methods: Option<String>,
    #[arg(long)]
    pub repeats: Option<usize>,
    #[arg(long)]
    pub passes: Option<f64>,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub strong: bool,
    /// Compute a high-accuracy reference optimum per repeat.
    #[arg(long)]
    pub reference: bool,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub p: usize,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub edges: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// LIBSVM output; the sidecar is written to `<out>.json`.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0.1)]
    pub noise: f64,
    #[arg(long, default_value_t = 1.0)]
    pub feature_scale: f64,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Abort(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Abort(_) => 3,
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let outcome = match cli.command {
        Command::Fit(a) => commands::fit(&a),
        Command::Benchmark(a) => commands::benchmark(&a),
        Command::Synth(a) => commands::synth(&a),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
