//! `regsub`: run the verification experiments and write one CSV row per check.
//!
//! Exit codes: 0 when every check passes, 1 when a check fails (a JSON failure report
//! goes to stderr), 2 for usage, schema or input errors.

mod commands;
mod config;
mod report;

use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use commands::{Command, Context};
use config::ExperimentConfig;
use report::{write_csv, FailureReport};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Lib(#[from] regsub::Error),
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
}

#[derive(Debug, Parser)]
#[command(
    name = "regsub",
    version,
    about = "Regular subspaces of one-dimensional diffusions"
)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// JSON experiment configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// CSV destination; overrides the config `output`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run the config `sweep` schedule (depths 6, 8, 10 when none is given).
    #[arg(long)]
    sweep: bool,
}

fn usage_error(message: &str) -> ExitCode {
    let report = serde_json::json!({ "status": "usage_error", "message": message });
    eprintln!("{report}");
    ExitCode::from(2)
}

fn execute(args: &Args) -> Result<(Vec<report::Row>, Option<PathBuf>), CliError> {
    let cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            ExperimentConfig::parse(&text)?
        }
        None => ExperimentConfig::default(),
    };
    let ctx = Context::new(&cfg, args.seed, args.sweep)?;
    let rows = commands::run(args.command, &cfg, &ctx)?;
    Ok((rows, args.out.clone().or(cfg.output)))
}

fn emit(rows: &[report::Row], out: Option<PathBuf>) -> Result<(), CliError> {
    let result = match out {
        Some(path) => write_csv(rows, File::create(path)?),
        None => write_csv(rows, io::stdout().lock()),
    };
    result.map_err(|e| CliError::Io(io::Error::other(e)))
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return usage_error(&e.to_string()),
    };
    let (rows, out) = match execute(&args) {
        Ok(r) => r,
        Err(CliError::Io(e)) => {
            eprintln!(
                "{}",
                serde_json::json!({ "status": "io_error", "message": e.to_string() })
            );
            return ExitCode::from(2);
        }
        Err(e) => return usage_error(&e.to_string()),
    };
    if let Err(e) = emit(&rows, out) {
        return usage_error(&e.to_string());
    }
    let failures: Vec<&report::Row> = rows.iter().filter(|r| !r.pass).collect();
    if failures.is_empty() {
        return ExitCode::SUCCESS;
    }
    let report = FailureReport {
        status: "check_failed",
        command: args.command.name(),
        failures,
    };
    let mut err = io::stderr().lock();
    let _ = serde_json::to_writer(&mut err, &report);
    let _ = writeln!(err);
    ExitCode::from(1)
}
