//! `subact`: runs sub-action and obstruction experiments from a TOML config.
//!
//! Each subcommand writes CSV tables, `verdict.json` and `manifest.json`
//! into `<out>/<subcommand>/`. Exit status 0 means the verdict passed,
//! 1 a failed certificate (the verdict is still written), 2 a bad config.

mod commands;
mod config;
mod output;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use serde_json::Value;

use crate::commands::Ctx;
use crate::config::{parse_config, ConfigError, ExperimentConfig};
use crate::output::{Artifacts, Manifest, Verdict, CSV_SCHEMA};

#[derive(Parser)]
#[command(name = "subact", version, about = "Sub-action and obstruction experiments for intermittent maps")]
struct Cli {
    /// Experiment config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `out` in the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, short, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Orbit asymptotics: ratio table along the neutral orbit.
    Asymptotics,
    /// Schedule gates, head-trim search and window counts.
    Gates,
    /// Positive segment sums and the sub-action violation certificate.
    Obstruction,
    /// Calibrate the negative-bump weight and check stopping times.
    Calibrate,
    /// Growth condition on omega / V over the (xi0, eta0) lattice.
    #[command(name = "assumption-a")]
    AssumptionA,
    /// The concave modulus Omega and its intermediate transforms.
    Omega,
    /// Compute and verify a sub-action for a random potential.
    Subaction,
    /// Collect the verdicts under the output directory.
    Report,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Asymptotics => "asymptotics",
            Command::Gates => "gates",
            Command::Obstruction => "obstruction",
            Command::Calibrate => "calibrate",
            Command::AssumptionA => "assumption-a",
            Command::Omega => "omega",
            Command::Subaction => "subaction",
            Command::Report => "report",
        }
    }
}

enum Failure {
    Config(ConfigError),
    Other(anyhow::Error),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Other(e)
    }
}

fn load_config(path: Option<&Path>) -> Result<ExperimentConfig, Failure> {
    let path = path.ok_or_else(|| ConfigError { key: "--config".into(), message: "required for this subcommand".into() })?;
    let text = fs::read_to_string(path).map_err(|e| ConfigError {
        key: "--config".into(),
        message: format!("cannot read {}: {e}", path.display()),
    })?;
    Ok(parse_config(&text)?)
}

fn run(cli: &Cli) -> Result<bool, Failure> {
    let start = Instant::now();
    let name = cli.command.name();
    let cfg = match cli.command {
        Command::Report => cli.config.as_deref().map(|p| load_config(Some(p))).transpose()?,
        _ => Some(load_config(cli.config.as_deref())?),
    };
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.as_ref().and_then(|c| c.out.clone()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| ConfigError { key: "--threads".into(), message: e.to_string() })?;
    }
    let mut art = Artifacts::new(&out.join(name))?;
    let result = match (cli.command, &cfg) {
        (Command::Report, _) => commands::report(&out, &mut art),
        (cmd, Some(cfg)) => {
            let ctx = Ctx { cfg, verbose: cli.verbose };
            match cmd {
                Command::Asymptotics => commands::asymptotics(&ctx, &mut art),
                Command::Gates => commands::gates(&ctx, &mut art),
                Command::Obstruction => commands::obstruction(&ctx, &mut art),
                Command::Calibrate => commands::calibrate(&ctx, &mut art),
                Command::AssumptionA => commands::assumption_a(&ctx, &mut art),
                Command::Omega => commands::omega(&ctx, &mut art),
                Command::Subaction => commands::subaction(&ctx, &mut art),
                Command::Report => unreachable!(),
            }
        }
        (_, None) => unreachable!("config is loaded for every subcommand but report"),
    };
    let verdict = result.unwrap_or_else(|e| Verdict {
        subcommand: name.to_string(),
        pass: false,
        summary: format!("error: {e:#}"),
        details: Value::Null,
    });
    art.json("verdict.json", &verdict)?;
    let mut files = art.files.clone();
    files.push("manifest.json".into());
    let manifest = Manifest {
        subcommand: name,
        library_version: subact_core::VERSION,
        cli_version: env!("CARGO_PKG_VERSION"),
        csv_schema: CSV_SCHEMA,
        seed: cfg.as_ref().map_or(0, |c| c.seed),
        threads: rayon::current_num_threads(),
        wall_time_seconds: start.elapsed().as_secs_f64(),
        config_path: cli.config.as_ref().map(|p| p.display().to_string()),
        config: cfg.as_ref().map_or(Value::Null, |c| serde_json::to_value(&c.raw).unwrap_or(Value::Null)),
        files,
    };
    art.json("manifest.json", &manifest).context("writing manifest")?;
    println!("{name}: {} - {}", if verdict.pass { "PASS" } else { "FAIL" }, verdict.summary);
    Ok(verdict.pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Config(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Other(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
