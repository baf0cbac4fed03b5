//! Thin scenario-runner CLI.  All substance lives in the library; this
//! binary parses flags, loads the config, dispatches the scenario, and
//! maps errors to exit codes (0 ok, 2 config, 3 numeric, 4 verification).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use tweezer_sim::config::{Config, Scenario};
use tweezer_sim::scenarios;

#[derive(Debug, Parser)]
#[command(
    name = "tweezer-sim",
    version,
    about = "Simulation and pulse-optimization toolkit for tweezer-based \
             atom transport, merging, and collision gates in an optical lattice"
)]
struct Cli {
    /// Configuration file (`section.key = value` lines; omit for defaults).
    #[arg(long)]
    config: Option<PathBuf>,

    /// Output directory (overrides `run.out`).
    #[arg(long)]
    out: Option<PathBuf>,

    /// Scenario to run (overrides `run.scenario`).
    #[arg(long)]
    scenario: Option<String>,

    /// Worker threads for scans and maps (overrides `run.threads`; 0 = all cores).
    #[arg(long)]
    threads: Option<usize>,

    /// Re-check results at doubled resolution and fail on disagreement.
    #[arg(long)]
    verify: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

fn execute(cli: &Cli) -> tweezer_sim::Result<()> {
    let mut config = match &cli.config {
        Some(path) => Config::from_file(path)?,
        None => Config::default(),
    };
    if let Some(out) = &cli.out {
        config.out_dir = out.to_string_lossy().into_owned();
    }
    if let Some(id) = &cli.scenario {
        config.scenario = Scenario::from_id(id).ok_or_else(|| tweezer_sim::Error::Config {
            line: 0,
            column: 0,
            message: format!(
                "unknown scenario `{id}`; expected one of {}",
                Scenario::ALL.map(Scenario::id).join(", ")
            ),
        })?;
    }
    if let Some(threads) = cli.threads {
        config.threads = threads;
    }
    if cli.verify {
        config.verify = true;
    }

    let report = scenarios::run(&config)?;
    println!("scenario {} complete", report.scenario.id());
    for note in &report.notes {
        println!("  {note}");
    }
    for file in &report.files {
        println!("  wrote {}", file.display());
    }
    Ok(())
}
