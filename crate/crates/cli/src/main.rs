// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Time-periodic forcing of linear dispersive equations on [0,1].
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// JSON problem configuration
    #[arg(long)]
    config: Option<PathBuf>,
    /// override a configuration entry, e.g. `--set discretisation.m=48`
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// output directory
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Asymptotic-periodicity verdict (JSON on stdout)
    Classify(Common),
    /// Recovered boundary coefficients per mode (JSON on stdout)
    Dtn(Common),
    /// Periodic trace u_T and the u₁ manifest
    Construct(Common),
    /// Oracle trajectory and periodicity diagnostics
    Simulate(Common),
    /// Phase heatmap of the Stokes determinant and its zeros
    DeltaMap(Common),
    /// Compares the oracle with u₁ + u₂
    Verify(Common),
}

/// Exit codes: 0 success, 1 I/O, 2 configuration, 3 ill-posed, 4 numerical.
pub enum Failure {
    Config(anyhow::Error),
    Io(anyhow::Error),
    Library(dispersive::Error),
    Check(String),
}

impl Failure {
    fn code(&self) -> u8 {
        use dispersive::Error as E;
        match self {
            Failure::Io(_) => 1,
            Failure::Config(_) => 2,
            Failure::Library(E::InvalidSymbol(_) | E::MalformedBoundaryConditions(_) | E::InvalidArgument(_)) => 2,
            Failure::Library(E::IllPosed(_) | E::Resonance { .. } | E::ProfileSingular { .. }) => 3,
            Failure::Library(_) | Failure::Check(_) => 4,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(e) => write!(f, "configuration error: {e:#}"),
            Failure::Io(e) => write!(f, "{e:#}"),
            Failure::Library(e) => write!(f, "{e}"),
            Failure::Check(s) => write!(f, "{s}"),
        }
    }
}

impl From<dispersive::Error> for Failure {
    fn from(e: dispersive::Error) -> Self {
        Failure::Library(e)
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Io(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, common) = match &cli.command {
        Command::Classify(c) => ("classify", c),
        Command::Dtn(c) => ("dtn", c),
        Command::Construct(c) => ("construct", c),
        Command::Simulate(c) => ("simulate", c),
        Command::DeltaMap(c) => ("delta-map", c),
        Command::Verify(c) => ("verify", c),
    };
    let result = config::load(common.config.as_deref(), &common.overrides).map_err(Failure::Config).and_then(|cfg| {
        let out = common.out.as_deref();
        match &cli.command {
            Command::Classify(_) => commands::classify(&cfg, out),
            Command::Dtn(_) => commands::dtn(&cfg, out),
            Command::Construct(_) => commands::construct(&cfg, out),
            Command::Simulate(_) => commands::simulate(&cfg, out),
            Command::DeltaMap(_) => commands::delta_map(&cfg, out),
            Command::Verify(_) => commands::verify(&cfg, out),
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{name}: {e}");
            ExitCode::from(e.code())
        }
    }
}
