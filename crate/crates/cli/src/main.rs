use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use stochtaylor_cli::{report::check_line, run_with, Command, Config, Overrides};

/// Pathwise stochastic Taylor expansion experiments.
#[derive(Debug, Parser)]
#[command(name = "stochtaylor", version)]
struct Cli {
    command: Command,
    /// Sectioned key = value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long)]
    level: Option<u32>,
    /// One value or a comma-separated list.
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let overrides = Overrides { seed: cli.seed, paths: cli.paths, level: cli.level, alpha: cli.alpha, out: cli.out };
    let cfg = match Config::load(cli.config.as_deref(), &overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let hash = cfg.hash();
    let report = run_with(cli.command, &cfg, |out| {
        let mut stdout = std::io::stdout().lock();
        for c in &out.checks {
            let _ = writeln!(stdout, "{}", check_line(c, &hash));
        }
        let _ = stdout.flush();
    });
    if let Err(e) = report.write(&cfg.run.out) {
        eprintln!("error: cannot write results to {}: {e}", cfg.run.out.display());
        return ExitCode::from(1);
    }
    println!("{}", report.summary().lines().last().unwrap_or_default());
    ExitCode::from(report.exit_code())
}
