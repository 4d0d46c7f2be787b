//! `combmap` command-line front end.
//!
//! Exit codes: 0 success or PASS, 1 usage/config/IO error, 2 numerical
//! failure, 3 comparison FAIL.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::CliError;
use config::RunConfig;

#[derive(Parser)]
#[command(name = "combmap", version, about = "Best uniform approximation of sgn(x) by odd rationals with fixed poles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Problem configuration (`key = value` lines).
    #[arg(long)]
    config: PathBuf,
    /// Level schedule, e.g. `8,16,32`; overrides the config.
    #[arg(long, value_delimiter = ',')]
    levels: Option<Vec<usize>>,
    /// Cauchy tolerance on B0; overrides the config.
    #[arg(long = "tol-b0")]
    tol_b0: Option<f64>,
    /// Points of the alternation and Remez grids; overrides the config.
    #[arg(long)]
    grid: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the conformal map, print L and write result.json.
    Solve(Common),
    /// Run the Remez oracle and print E and the coefficients.
    Oracle(Common),
    /// Compare conformal L against the oracle E.
    Compare {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1e-3)]
        threshold: f64,
        /// Use a stored result.json instead of solving.
        #[arg(long)]
        result: Option<PathBuf>,
    },
    /// Write curve.csv, tips.csv, boundary.csv and alternation.csv.
    Trace {
        #[command(flatten)]
        common: Common,
        /// Use a stored result.json instead of solving.
        #[arg(long)]
        result: Option<PathBuf>,
    },
}

fn load(common: &Common) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(&common.config).map_err(|source| CliError::Io { path: common.config.clone(), source })?;
    let mut cfg = config::parse(&text, common.out.clone())?;
    if let Some(levels) = &common.levels {
        cfg.schedule = levels.clone();
    }
    if let Some(t) = common.tol_b0 {
        cfg.tol_b0 = t;
    }
    if let Some(g) = common.grid {
        cfg.grid = g;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Solve(c) => commands::cmd_solve(&load(&c)?),
        Command::Oracle(c) => commands::cmd_oracle(&load(&c)?),
        Command::Compare { common, threshold, result } => commands::cmd_compare(&load(&common)?, result.as_deref(), threshold),
        Command::Trace { common, result } => commands::cmd_trace(&load(&common)?, result.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
