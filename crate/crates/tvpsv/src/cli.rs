//! Command-line front end.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use tvpsv_core::model::ModelId;

use crate::commands::{self, Run};
use crate::config::{Profile, RunConfig};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "tvpsv", version = crate::VERSION, about = "Shrinkage TVP regressions with heavy-tailed stochastic volatility")]
pub struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Master random seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Model to fit, e.g. t-tvp-sv-dl-3.
    #[arg(long, global = true, value_parser = parse_model)]
    pub model: Option<ModelId>,
    /// Run-length profile.
    #[arg(long, global = true, value_enum)]
    pub profile: Option<Profile>,
    /// Directory for every output file.
    #[arg(long, global = true, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit one model on the full sample and store its posterior draws.
    Fit,
    /// Expanding-window out-of-sample forecasts of every configured model.
    Backtest,
    /// Evaluate the trading rule on stored backtest forecasts.
    Trade,
    /// Generate a synthetic dataset and a configuration that fits it.
    Simulate,
    /// Joint-distribution tests of the sampler blocks.
    Validate {
        /// Cycles per joint-distribution test.
        #[arg(long, default_value_t = 10_000)]
        cycles: usize,
    },
}

fn parse_model(s: &str) -> std::result::Result<ModelId, String> {
    s.parse::<ModelId>().map_err(|_| {
        let names: Vec<&str> = ModelId::ALL.iter().map(|m| m.name()).collect();
        format!("unknown model '{s}'; expected one of {}", names.join(", "))
    })
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Fit => "fit",
            Command::Backtest => "backtest",
            Command::Trade => "trade",
            Command::Simulate => "simulate",
            Command::Validate { .. } => "validate",
        }
    }

    fn needs_config(&self) -> bool {
        matches!(self, Command::Fit | Command::Backtest | Command::Trade)
    }
}

/// Resolve the configuration: profile defaults, then the file, then flags.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    if cli.config.is_none() && cli.command.needs_config() {
        return Err(Error::Usage(format!("`{}` requires --config <PATH>", cli.command.name())));
    }
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path, cli.profile)?,
        None => RunConfig::defaults(cli.profile.unwrap_or(Profile::Desk)),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(model) = cli.model {
        config.model = model;
    }
    if let Some(dir) = &cli.out_dir {
        config.output.dir = dir.clone();
    }
    config.validate()?;
    Ok(config)
}

pub fn execute(cli: Cli) -> Result<()> {
    let config = resolve_config(&cli)?;
    let mut run = Run::new(config, cli.command.name())?;
    match cli.command {
        Command::Fit => commands::fit(&mut run)?,
        Command::Backtest => commands::run_backtest(&mut run)?,
        Command::Trade => commands::trade(&mut run)?,
        Command::Simulate => commands::simulate(&mut run)?,
        Command::Validate { cycles } => {
            let outcome = commands::validate(&mut run, cycles);
            run.finish()?;
            return outcome;
        }
    }
    run.finish()?;
    Ok(())
}

/// Parse arguments and run; returns the process exit code.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if let Error::Usage(_) = e {
                eprintln!("\nRun `tvpsv --help` for usage.");
            }
            e.exit_code()
        }
    }
}
