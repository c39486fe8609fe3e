//! `gpreg`: run fits and simulation studies from TOML configs.

mod commands;
mod config;
mod error;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gpreg_experiments::{BandConfig, RateConfig, StudyConfig};
use serde::Serialize;
use serde_json::json;

use crate::commands::Outcome;
use crate::config::{load, FitConfig, SpectraConfig};
use crate::error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "gpreg", version, about = "Gaussian-process regression fits and simulation studies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit one dataset and write posterior mean, variance and bands per order.
    Fit(RunArgs),
    /// Replicated RMSE table over sample sizes and methods.
    Table(RunArgs),
    /// Log-log convergence-rate fit with oracle regularization.
    Rates(RunArgs),
    /// Credible-band example and frequentist coverage.
    Bands(RunArgs),
    /// Effective-dimension sweep over lambda.
    Spectra(RunArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// TOML config file.
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output directory (created if missing).
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Overrides the config seed.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Worker threads for replicated studies (0 = all cores).
    #[arg(long, value_name = "N", default_value_t = 0)]
    threads: usize,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Fit(_) => "fit",
            Command::Table(_) => "table",
            Command::Rates(_) => "rates",
            Command::Bands(_) => "bands",
            Command::Spectra(_) => "spectra",
        }
    }

    fn args(&self) -> &RunArgs {
        match self {
            Command::Fit(a) | Command::Table(a) | Command::Rates(a) | Command::Bands(a) | Command::Spectra(a) => a,
        }
    }
}

fn finish<C: Serialize>(name: &str, args: &RunArgs, cfg: &C, seed: Option<u64>, outcome: Outcome) -> Result<()> {
    let config_toml =
        toml::to_string(cfg).map_err(|e| CliError::Config(format!("config cannot be echoed as TOML: {e}")))?;
    let meta = json!({
        "command": name,
        "version": env!("CARGO_PKG_VERSION"),
        "seed": seed,
        "threads": args.threads,
        "config": cfg,
        "config_toml": config_toml,
        "outputs": outcome.files.iter().map(|(n, _)| n.clone()).collect::<Vec<_>>(),
        "details": outcome.details,
    });
    let mut files = outcome.files;
    let body = serde_json::to_string_pretty(&meta).expect("metadata serializes");
    files.push(("metadata.json".into(), body + "\n"));
    commands::write_files(&args.out, &files)
}

fn load_seeded<C: serde::de::DeserializeOwned>(path: &Path, seed: Option<u64>, set: impl FnOnce(&mut C, u64)) -> Result<C> {
    let mut cfg: C = load(path)?;
    if let Some(s) = seed {
        set(&mut cfg, s);
    }
    Ok(cfg)
}

fn run(cmd: &Command) -> Result<()> {
    let args = cmd.args();
    let name = cmd.name();
    match cmd {
        Command::Fit(_) => {
            let cfg: FitConfig = load_seeded(&args.config, args.seed, |c: &mut FitConfig, s| c.seed = s)?;
            let out = commands::fit(&cfg)?;
            finish(name, args, &cfg, Some(cfg.seed), out)
        }
        Command::Table(_) => {
            let cfg: StudyConfig = load_seeded(&args.config, args.seed, |c: &mut StudyConfig, s| c.seed = s)?;
            let out = commands::table(&cfg, args.threads)?;
            finish(name, args, &cfg, Some(cfg.seed), out)
        }
        Command::Rates(_) => {
            let cfg: RateConfig = load_seeded(&args.config, args.seed, |c: &mut RateConfig, s| c.seed = s)?;
            let out = commands::rates(&cfg, args.threads)?;
            finish(name, args, &cfg, Some(cfg.seed), out)
        }
        Command::Bands(_) => {
            let cfg: BandConfig = load_seeded(&args.config, args.seed, |c: &mut BandConfig, s| c.seed = s)?;
            let out = commands::bands(&cfg, args.threads)?;
            finish(name, args, &cfg, Some(cfg.seed), out)
        }
        Command::Spectra(_) => {
            // deterministic; a seed override has nothing to act on
            let cfg: SpectraConfig = load(&args.config)?;
            let out = commands::spectra(&cfg)?;
            finish(name, args, &cfg, None, out)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::Config(e.to_string().trim().to_string());
            eprintln!("{}", err.record());
            return ExitCode::from(err.exit_code() as u8);
        }
    };
    match run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{}", err.record());
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
