//! Command-line companion to `plus-core`: configuration, file formats,
//! the parallel sweep driver and the `plus` binary's subcommands.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 runtime failure
//! (divergence, solver failure, I/O while running).

pub mod commands;
pub mod config;
pub mod io;
pub mod manifest;
pub mod plant;

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{ConfigError, LoadedConfig};
use crate::manifest::{write_manifest, OutputDir};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error("{0:#}")]
    Runtime(anyhow::Error),
}

impl CliError {
    pub fn runtime(e: impl Into<anyhow::Error>) -> Self {
        Self::Runtime(e.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Usage(_) => EXIT_CONFIG,
            Self::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "plus", version, about = "Powerline unmanned surfer: frequency-matched powerline tracking")]
pub struct Cli {
    /// JSON config; built-in reference defaults when omitted
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// master seed (overrides the config's `seed`)
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// directory for all outputs
    #[arg(long, global = true, default_value = "out")]
    pub out_dir: PathBuf,
    /// worker threads for the sweep
    #[arg(long, global = true, env = "PLUS_SIM_THREADS")]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fly the configured powerline under the morph schedule
    Simulate(SimulateArgs),
    /// Run the wingspan × chord × pylon span × sag sweep
    Sweep(SweepArgs),
    /// Generate a multistep servo record and fit transfer functions
    Sysid(SysidArgs),
    /// Powerline environment queries
    Env(EnvArgs),
    /// Phugoid wavelength over wingspan × chord × σ
    WavelengthMap,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// also run the least-squares trend search for σ̂
    #[arg(long)]
    pub trend_search: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// continue from the partial results in the output directory
    #[arg(long)]
    pub resume: bool,
    /// stop after this many cells, leaving partial results (testing aid)
    #[arg(long, hide = true)]
    pub stop_after_cells: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StructureArg {
    All,
    FirstOrder,
    SecondOrder,
    SecondOrderDelay,
}

#[derive(Debug, Args)]
pub struct SysidArgs {
    /// fit this `(t, command, output)` CSV instead of generating one
    #[arg(long)]
    pub record: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "all")]
    pub structure: StructureArg,
}

#[derive(Debug, Args)]
pub struct EnvArgs {
    #[command(subcommand)]
    pub query: EnvQuery,
}

#[derive(Debug, Subcommand)]
pub enum EnvQuery {
    /// Catenary parameter, sag depth and midspan spatial frequency
    Catenary {
        /// span length, m
        #[arg(long)]
        span: f64,
        /// sag, percent of span
        #[arg(long)]
        sag: f64,
        /// tower height, m
        #[arg(long, default_value_t = 30.0)]
        height: f64,
        /// profile samples written to catenary.csv
        #[arg(long, default_value_t = 141)]
        points: usize,
    },
    /// Powerline classes (voltage, tower height, pylon spacing)
    Classes,
    /// Magnetic flux density around a conductor
    Field {
        /// A
        #[arg(long)]
        current: f64,
        /// m
        #[arg(long)]
        distance: f64,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::Sweep(_) => "sweep",
            Command::Sysid(_) => "sysid",
            Command::Env(_) => "env",
            Command::WavelengthMap => "wavelength-map",
        }
    }
}

/// Shared state handed to every command.
pub struct Context {
    pub loaded: LoadedConfig,
    pub seed: u64,
    pub jobs: usize,
    pub out: OutputDir,
}

/// Runs the CLI and returns the process exit code. Diagnostics go to stderr.
pub fn run(cli: Cli) -> i32 {
    let started = Instant::now();
    let name = cli.command.name();
    let mut out = match OutputDir::create(&cli.out_dir) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e:#}");
            return EXIT_RUNTIME;
        }
    };
    let loaded = match &cli.config {
        Some(p) => config::load(p),
        None => Ok(LoadedConfig::defaults()),
    };
    let jobs = match cli.jobs {
        Some(0) => Err(CliError::Usage("--jobs must be at least 1".into())),
        Some(j) => Ok(j),
        None => Ok(std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)),
    };
    let (mut loaded, jobs) = match (loaded, jobs) {
        (Ok(l), Ok(j)) => (l, j),
        (Err(e), _) => return early_failure(&mut out, name, &cli, started, e.into()),
        (_, Err(e)) => return early_failure(&mut out, name, &cli, started, e),
    };
    let seed = cli.seed.unwrap_or(loaded.config.seed);
    loaded.config.seed = seed;
    let mut ctx = Context { loaded, seed, jobs, out };
    let result = match &cli.command {
        Command::Simulate(a) => commands::simulate::run(&mut ctx, a),
        Command::Sweep(a) => commands::sweep::run(&mut ctx, a),
        Command::Sysid(a) => commands::sysid::run(&mut ctx, a),
        Command::Env(a) => commands::env::run(&mut ctx, a),
        Command::WavelengthMap => commands::wavelength::run(&mut ctx),
    };
    let failure = result.as_ref().err().map(|e| (e.exit_code(), e.to_string()));
    if let Some((_, msg)) = &failure {
        eprintln!("error: {msg}");
    }
    let jobs_used = matches!(cli.command, Command::Sweep(_)).then_some(jobs);
    finish(&mut ctx.out, name, &ctx.loaded.path, Some(&ctx.loaded.config), seed, jobs_used, started, failure)
}

fn early_failure(out: &mut OutputDir, name: &str, cli: &Cli, started: Instant, e: CliError) -> i32 {
    eprintln!("error: {e}");
    let path = cli.config.clone().unwrap_or_else(|| PathBuf::from("<defaults>"));
    let failure = Some((e.exit_code(), e.to_string()));
    finish(out, name, &path, None, cli.seed.unwrap_or(0), None, started, failure)
}

#[allow(clippy::too_many_arguments)]
fn finish(
    out: &mut OutputDir,
    name: &str,
    config_path: &std::path::Path,
    config: Option<&config::Config>,
    seed: u64,
    jobs: Option<usize>,
    started: Instant,
    failure: Option<(i32, String)>,
) -> i32 {
    let code = failure.as_ref().map(|f| f.0).unwrap_or(EXIT_OK);
    if let Err(e) = write_manifest(out, name, config_path, config, seed, jobs, started, failure) {
        eprintln!("error: cannot write manifest: {e:#}");
        return if code == EXIT_OK { EXIT_RUNTIME } else { code };
    }
    code
}
