//! `aerial-noma`: coverage sweeps, Monte Carlo validation, altitude planning
//! and trajectory export for a UAV sharing an uplink with a ground user.

mod commands;
mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{Failure, Report};
use config::{parse_ini, parse_override, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "aerial-noma", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Override one setting; may be repeated.
    #[arg(long = "set", global = true, value_name = "SECTION.KEY=VALUE")]
    set: Vec<String>,

    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Monte Carlo trials per point.
    #[arg(long, global = true, value_name = "N")]
    trials: Option<u64>,

    /// Monte Carlo seed.
    #[arg(long, global = true, value_name = "S")]
    seed: Option<u64>,

    /// Worker threads; output does not depend on this.
    #[arg(long, global = true, value_name = "K")]
    threads: Option<usize>,

    /// Add Monte Carlo rows to the coverage output.
    #[arg(long, global = true)]
    validate: bool,

    /// Exit with status 3 when validation finds a disagreement.
    #[arg(long, global = true)]
    strict: bool,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Event and coverage probabilities at every trajectory point.
    Coverage,
    /// Lowest altitude meeting the QoS target, and the best altitude.
    MinHeight,
    /// Write the trajectory points.
    Trajectory,
    /// Same as `coverage --validate`.
    Validate,
    /// LoS probability against horizontal distance for several altitudes.
    LosTable,
}

fn load(cli: &Cli) -> Result<RunConfig, Failure> {
    let (mut settings, base) = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
            let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
            (
                parse_ini(&text, path).map_err(|e| Failure::Config(e.to_string()))?,
                base,
            )
        }
        None => (Vec::new(), PathBuf::new()),
    };
    for (i, arg) in cli.set.iter().enumerate() {
        settings.push(parse_override(arg, i + 1).map_err(|e| Failure::Config(e.to_string()))?);
    }
    let mut cfg = RunConfig::build(&settings, &base).map_err(|e| Failure::Config(e.to_string()))?;
    if let Some(out) = &cli.out {
        cfg.output = out.clone();
    }
    if let Some(t) = cli.trials {
        cfg.mc.trials = t;
    }
    if let Some(s) = cli.seed {
        cfg.mc.seed = s;
    }
    cfg.mc
        .validate()
        .map_err(|e| Failure::Config(format!("--trials: {e}")))?;
    Ok(cfg)
}

fn execute(cli: &Cli, cfg: &RunConfig) -> Result<Report, Failure> {
    match cli.command {
        Command::Coverage => commands::coverage(cfg, cli.validate),
        Command::Validate => commands::coverage(cfg, true),
        Command::MinHeight => commands::min_height(cfg),
        Command::Trajectory => commands::trajectory(cfg),
        Command::LosTable => commands::los_table(cfg),
    }
}

#[cfg(feature = "parallel")]
fn with_threads<T: Send>(
    threads: Option<usize>,
    f: impl FnOnce() -> T + Send,
) -> Result<T, Failure> {
    match threads {
        None => Ok(f()),
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .map_err(|e| Failure::Config(format!("--threads: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

#[cfg(not(feature = "parallel"))]
fn with_threads<T: Send>(
    _threads: Option<usize>,
    f: impl FnOnce() -> T + Send,
) -> Result<T, Failure> {
    Ok(f())
}

fn run(cli: &Cli) -> Result<(), Failure> {
    if cli.threads == Some(0) {
        return Err(Failure::Config("--threads: must be at least 1".into()));
    }
    let cfg = load(cli)?;
    let report = with_threads(cli.threads, || execute(cli, &cfg))??;
    for f in &report.files {
        println!("wrote {}", f.display());
    }
    if !report.mismatches.is_empty() {
        for m in &report.mismatches {
            eprintln!("mismatch: {m}");
        }
        let summary = format!(
            "{} analytic/Monte Carlo disagreements",
            report.mismatches.len()
        );
        if cli.strict {
            return Err(Failure::Validation(summary));
        }
        eprintln!("warning: {summary}");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.exit_code() as u8)
        }
    }
}
