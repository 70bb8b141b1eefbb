use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use scrambler_lab::{analyze, init_threads, load, rg_json, run_experiment, AnalyzeConfig, RunConfig};

#[derive(Parser)]
#[command(version, about = "Monitored sparse nonlocal circuit experiments")]
struct Cli {
    /// Worker threads; defaults to the config value, then to all cores.
    #[arg(long, global = true, env = "SCRAMBLER_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the sweep described by a TOML or JSON config.
    Run { config: PathBuf },
    /// Fit crossings and scaling collapses to a run's CSV output.
    Analyze { config: PathBuf },
    /// Print the fixed point of the block-decimation map.
    Rg,
}

fn main() -> ExitCode {
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn real_main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config } => {
            let cfg: RunConfig = load(&config)?;
            init_threads(cli.threads.or(cfg.threads))?;
            let summary = run_experiment(&cfg)?;
            println!("{}", serde_json::to_string_pretty(&summary)?);
        }
        Command::Analyze { config } => {
            let cfg: AnalyzeConfig = load(&config)?;
            init_threads(cli.threads.or(cfg.threads))?;
            let results = analyze(&cfg)?;
            println!("{}", serde_json::to_string_pretty(&results)?);
        }
        Command::Rg => {
            init_threads(cli.threads)?;
            println!("{}", rg_json()?);
        }
    }
    Ok(())
}
