use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use cqed::commands::{self, Options};
use cqed::config::LoadedConfig;
use cqed::Result;
use cqed_core::Engine;

#[derive(Parser)]
#[command(name = "cqed", version, about = "Cavity-QED photonic gate simulator")]
struct Cli {
    /// Propagation engine; overrides the scenario file.
    #[arg(long, global = true, value_enum)]
    engine: Option<EngineArg>,
    /// Relative tolerance of adaptive integration.
    #[arg(long, global = true)]
    rtol: Option<f64>,
    /// Directory for CSV and JSON artifacts.
    #[arg(long, short, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps and truth tables (0 = all cores).
    #[arg(long, short = 'j', global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    Full,
    Effective,
    Master,
}

#[derive(Subcommand)]
enum Command {
    /// Print the Hamiltonian, its reduction and resonance conditions as JSON.
    Eliminate { config: PathBuf },
    /// Propagate the seed state and write its trajectory.
    Run { config: PathBuf },
    /// Gate fidelity over a detuning or decay-rate sweep.
    Sweep { config: PathBuf },
    /// Logical truth table at the interaction time.
    TruthTable { config: PathBuf },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    let opts = Options {
        engine: cli.engine.map(|e| match e {
            EngineArg::Full => Engine::Full,
            EngineArg::Effective => Engine::Effective,
            EngineArg::Master => Engine::Master,
        }),
        rtol: cli.rtol,
        out_dir: cli.out,
        workers: cli.workers,
    };
    let paths = match cli.command {
        Command::Eliminate { config } => {
            let report = commands::eliminate_report(&LoadedConfig::from_path(&config)?, &opts)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            return Ok(());
        }
        Command::Run { config } => commands::run(&LoadedConfig::from_path(&config)?, &opts)?,
        Command::Sweep { config } => commands::sweep(&LoadedConfig::from_path(&config)?, &opts)?,
        Command::TruthTable { config } => commands::truth_table(&LoadedConfig::from_path(&config)?, &opts)?,
    };
    for p in paths {
        println!("{}", p.display());
    }
    Ok(())
}
