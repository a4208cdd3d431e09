//! Library side of the `veblen-dyn` command line: argument parsing, config
//! layering and the subcommands.

pub mod commands;
pub mod config;
pub mod output;
pub mod plot;

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::config::{
    BasinArgs, BifurcationArgs, EquilibriaArgs, ExperimentConfig, IsoclineArgs, ParamArgs, SimulateArgs, TaxCheckArgs,
};

#[derive(Debug, Parser)]
#[command(
    name = "veblen-dyn",
    version,
    about = "Steady states, bifurcations and basins of the Veblen/broken-windows map"
)]
pub struct Cli {
    /// JSON experiment configuration; flags override its keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Named parameter set: fig4a, fig4b, fig5, fig6, fig7a, fig7b, fig8a, fig8b.
    #[arg(long, global = true)]
    preset: Option<String>,
    #[command(flatten)]
    params: ParamArgs,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Also render PNG plots next to the CSV files.
    #[arg(long, global = true)]
    png: bool,
    /// No summary on standard output.
    #[arg(long, short, global = true)]
    quiet: bool,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true, env = "VEBLEN_DYN_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Iterate the map from one initial state (orbit.csv).
    Simulate(SimulateArgs),
    /// Steady states and their stability (equilibria.csv).
    Equilibria(EquilibriaArgs),
    /// Orbit diagram and bifurcation crossings over a parameter (sweep.csv, crossings.csv).
    Bifurcation(BifurcationArgs),
    /// Basins of attraction on a rectangle (basin_labels.csv, basin_summary.csv).
    Basin(BasinArgs),
    /// Check that the consumption tax leaves the dynamics unchanged.
    TaxCheck(TaxCheckArgs),
    /// Sample both steady-state isoclines (isoclines.csv).
    Isoclines(IsoclineArgs),
}

#[derive(Debug)]
pub enum CliError {
    /// Exit code 2.
    Config(String),
    /// Exit code 3.
    Runtime(String),
    /// Exit code 1.
    Check(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Check(_) => 1,
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Runtime(m) => write!(f, "runtime error: {m}"),
            CliError::Check(m) => write!(f, "check failed: {m}"),
        }
    }
}

impl From<veblen_core::Error> for CliError {
    fn from(e: veblen_core::Error) -> Self {
        use veblen_core::Error as E;
        match e {
            E::InvalidParam { .. } | E::InvalidSetting(_) | E::UnknownParameter(_) => CliError::Config(e.to_string()),
            E::Domain(_) | E::NoEquilibrium { .. } | E::Divergence { .. } => CliError::Runtime(e.to_string()),
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let config = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    let preset = config::resolve_preset(cli.preset.as_deref(), &config)?;
    let params = config::resolve_params(preset, &config, &cli.params)?;
    let ctx =
        commands::Context { params, preset, out: output::OutDir::create(&cli.out)?, png: cli.png, quiet: cli.quiet };
    match cli.command {
        Command::Simulate(a) => commands::simulate(&ctx, a.overlay(config.simulate)),
        Command::Equilibria(a) => commands::equilibria(&ctx, a.overlay(config.equilibria)),
        Command::Bifurcation(a) => commands::bifurcation(&ctx, a.overlay(config.bifurcation)),
        Command::Basin(a) => commands::basin(&ctx, a.overlay(config.basin)),
        Command::TaxCheck(a) => commands::tax_check(&ctx, a.overlay(config.tax_check)),
        Command::Isoclines(a) => commands::isoclines(&ctx, a.overlay(config.isoclines)),
    }
}

/// Runs a parsed command line, inside a pool of `--threads` workers when
/// given.
pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.threads {
        None => dispatch(cli),
        Some(0) => Err(CliError::Config("--threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Runtime(format!("thread pool: {e}")))?
            .install(|| dispatch(cli)),
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn main_with_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("veblen-dyn: {e}");
            e.exit_code()
        }
    }
}
