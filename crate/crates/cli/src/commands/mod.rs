pub mod coupling;
pub mod discrete;
pub mod energy;
pub mod exit;
pub mod levy;
pub mod selftest;

use crate::config::{ExperimentConfig, SweepEntry, Tolerances};
use crate::report::Row;
use crate::CliError;

/// Settings shared by every command.
#[derive(Debug, Clone)]
pub struct Context {
    pub seed: Option<u64>,
    pub tol: Tolerances,
    pub sweep: bool,
    pub schedule: Vec<SweepEntry>,
}

impl Context {
    pub fn new(cfg: &ExperimentConfig, seed: Option<u64>, sweep: bool) -> Result<Self, CliError> {
        let schedule = match &cfg.sweep {
            Some(s) if s.is_empty() => {
                return Err(CliError::Usage("`sweep` schedule is empty".into()))
            }
            Some(s) => s.clone(),
            None => default_schedule(),
        };
        Ok(Self {
            seed: seed.or(cfg.seed),
            tol: cfg.tolerances,
            sweep,
            schedule,
        })
    }

    pub fn schedule(&self) -> &[SweepEntry] {
        &self.schedule
    }
}

/// Depths 6, 8 and 10 at the command's base grid and step.
pub fn default_schedule() -> Vec<SweepEntry> {
    [6, 8, 10]
        .into_iter()
        .map(|d| SweepEntry {
            depth: Some(d),
            ..Default::default()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    VerifyEnergy,
    ExitStats,
    Levy,
    Discrete,
    Coupling,
    Selftest,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::VerifyEnergy => "verify-energy",
            Command::ExitStats => "exit-stats",
            Command::Levy => "levy",
            Command::Discrete => "discrete",
            Command::Coupling => "coupling",
            Command::Selftest => "selftest",
        }
    }
}

pub fn run(cmd: Command, cfg: &ExperimentConfig, ctx: &Context) -> Result<Vec<Row>, CliError> {
    match cmd {
        Command::VerifyEnergy => energy::run(ctx, &cfg.params()?),
        Command::ExitStats => exit::run(ctx, &cfg.params()?),
        Command::Levy => levy::run(ctx, &cfg.params()?),
        Command::Discrete => discrete::run(ctx, &cfg.params()?),
        Command::Coupling => coupling::run(ctx, &cfg.params()?),
        Command::Selftest => {
            if cfg.params.is_some() {
                return Err(CliError::Usage("selftest takes no `params`".into()));
            }
            selftest::run(ctx)
        }
    }
}
