use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use serde_json::json;

use acmag::scenario::{run_scenario, validate_config_with, Overrides, ScenarioError};

/// Reproduce AC magnetometry sweeps, fits and noise studies from a TOML config.
#[derive(Debug, Parser)]
#[command(name = "acmag", version, about)]
struct Cli {
    /// Scenario id: time-sweep, phase-deviation-sweep, slope-vs-N, slope-vs-B,
    /// limit-curves, coherence-decays, sensitivity-report, mc-validate.
    #[arg(long)]
    scenario: Option<String>,
    /// TOML config file; every key is optional.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Worker threads (default: all cores). Output does not depend on it.
    #[arg(long)]
    threads: Option<usize>,
}

fn run(cli: Cli) -> Result<serde_json::Value, ScenarioError> {
    let text = match &cli.config {
        Some(path) => fs::read_to_string(path).map_err(|e| ScenarioError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?,
        None => String::new(),
    };
    let overrides = Overrides {
        scenario: cli.scenario,
        seed: cli.seed,
        out_dir: cli.out_dir,
    };
    let config = validate_config_with(&text, &overrides)?;
    let summary = run_scenario(&config, cli.threads)?;
    Ok(json!({
        "status": "ok",
        "scenario": config.scenario.id(),
        "manifest": summary.manifest,
        "files": summary.files,
    }))
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(report) => {
            println!("{report}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(2)
        }
    }
}
