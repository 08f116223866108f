//! `diracnet`: train neural-network bound states of the radial Dirac
//! equation and compare them with exact and eigensolver references.

mod config;
mod export;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use crate::config::Config;
use crate::run::Session;

#[derive(Parser)]
#[command(name = "diracnet", version, about)]
struct Cli {
    /// TOML file with [system], [mesh], [network], [training] and [output] sections.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Seed for network initialization.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Directory for energies.json, CSVs and checkpoints.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Cap on training epochs per state.
    #[arg(long, global = true, value_name = "N")]
    max_epochs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Train the state selected by training.method, training.n and the first κ.
    Solve,
    /// Fill the bound levels of every listed κ with system.particles and train each occupied level.
    Spectrum,
    /// Train training.levels states per κ with the inverse and orthonormal methods.
    Benchmark,
    /// Direct-minimization collapse, split-network and direct-F comparisons.
    Ablation,
}

fn run(cli: Cli) -> Result<()> {
    let config =
        Config::load(cli.config.as_deref())?.with_overrides(cli.seed, cli.out, cli.max_epochs)?;
    let session = Session::new(config)?;
    match cli.command {
        Command::Solve => session.solve(),
        Command::Spectrum => session.spectrum(),
        Command::Benchmark => session.benchmark(),
        Command::Ablation => session.ablation(),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
