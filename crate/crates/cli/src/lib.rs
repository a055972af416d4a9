pub mod config;
pub mod experiments;
pub mod report;

pub use config::{Config, ConfigError, Overrides};
pub use experiments::{Artifact, Bound, Check, Outcome};
pub use report::RunReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Rates,
    Taylor,
    Char,
    Viscosity,
    All,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Rates => "rates",
            Command::Taylor => "taylor",
            Command::Char => "char",
            Command::Viscosity => "viscosity",
            Command::All => "all",
        }
    }
}

type Pipeline = fn(&Config) -> Outcome;

/// Run the pipelines of `cmd` in order, calling `progress` after each one.
pub fn run_with(cmd: Command, cfg: &Config, mut progress: impl FnMut(&Outcome)) -> RunReport {
    let all: [(Command, Pipeline); 4] = [
        (Command::Rates, experiments::rates),
        (Command::Taylor, experiments::taylor),
        (Command::Char, experiments::characteristics),
        (Command::Viscosity, experiments::viscosity),
    ];
    let mut report = RunReport { command: cmd.name().into(), config_hash: cfg.hash(), checks: Vec::new(), artifacts: Vec::new() };
    for (c, pipeline) in all {
        if cmd == Command::All || cmd == c {
            let out = pipeline(cfg);
            progress(&out);
            report.checks.extend(out.checks);
            report.artifacts.extend(out.artifacts);
        }
    }
    report
}

pub fn run(cmd: Command, cfg: &Config) -> RunReport {
    run_with(cmd, cfg, |_| {})
}
