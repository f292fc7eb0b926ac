use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

mod commands;
mod config;
mod rundir;

use config::{ConfigError, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "wrsn", version, about = "Mobile-charger scheduling for wireless rechargeable sensor networks")]
struct Cli {
    /// Run directory; defaults to a timestamped directory under $WRSN_OUT (or ./runs).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic scenario file.
    Generate(config::GenerateArgs),
    /// Lifetime without chargers and under a controller.
    Simulate(config::SimulateArgs),
    /// Train charging policies.
    Train(config::TrainArgs),
    /// Dump a decision-time observation and, with a checkpoint, the selection overlay.
    Inspect(config::InspectArgs),
    /// Repeat a run from its echoed config.json.
    Rerun {
        config: PathBuf,
    },
}

fn run(cli: Cli) -> Result<()> {
    let resolved = match cli.command {
        Command::Generate(a) => a.resolve()?,
        Command::Simulate(a) => a.resolve()?,
        Command::Train(a) => a.resolve()?,
        Command::Inspect(a) => a.resolve()?,
        Command::Rerun { config } => RunConfig::load(&config)?,
    };
    let dir = rundir::RunDir::create(cli.out_dir, resolved.name())?;
    dir.write_json("config.json", &resolved)?;
    match &resolved {
        RunConfig::Generate(c) => commands::generate(c, &dir)?,
        RunConfig::Simulate(c) => commands::simulate(c, &dir)?,
        RunConfig::Train(c) => commands::train(c, &dir)?,
        RunConfig::Inspect(c) => commands::inspect(c, &dir)?,
    }
    dir.finish(resolved.name())?;
    Ok(())
}

/// 2 config, 3 validation, 4 runtime invariant, 1 anything else.
fn exit_code(err: &anyhow::Error) -> u8 {
    use wrsn_core::Error as E;
    for cause in err.chain() {
        if cause.is::<ConfigError>() || cause.is::<serde_json::Error>() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::Io { .. } | E::Parse(_) => 2,
                E::Invariant(_) | E::NonFiniteGradient(_) | E::NonFiniteRatio(_) => 4,
                _ => 3,
            };
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
