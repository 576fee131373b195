use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use charflow::config::RunConfig;
use charflow::pipeline::{self, ExitStatus, Outcome};
use charflow::plot::emit_plots;
use charflow::Error;

/// Conservative solutions of the generalized Camassa-Holm family through
/// wave breaking.
#[derive(Parser)]
#[command(name = "charflow", version)]
struct Cli {
    /// Reserved; every run is deterministic.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Only report errors and failing gates.
    #[arg(long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a configured scenario and write energies, snapshots and a report.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Compare against the classical solver before breaking.
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Check a config and its initial datum without running.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Write SVG plots for a run directory made by `simulate`.
    EmitPlots {
        /// Run directory (defaults to --out).
        run_dir: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn load(path: &Path) -> Result<RunConfig, Error> {
    RunConfig::load(path)
}

fn finish(outcome: &Outcome, quiet: bool) -> ExitStatus {
    if !quiet {
        for (k, v) in outcome.report.entries() {
            if !k.starts_with("snapshot.") && !k.starts_with("breaking.") {
                println!("{k}={v}");
            }
        }
        for f in &outcome.files {
            println!("wrote {}", f.display());
        }
    }
    for g in outcome.failing() {
        eprintln!("gate {} failed: {}", g.name, g.detail);
    }
    outcome.status()
}

fn run(cli: &Cli) -> Result<ExitStatus, Error> {
    match &cli.command {
        Command::Simulate { config, out } => {
            let outcome = pipeline::simulate(&load(config)?, out)?;
            Ok(finish(&outcome, cli.quiet))
        }
        Command::Compare { config, out } => {
            let outcome = pipeline::compare(&load(config)?, out)?;
            Ok(finish(&outcome, cli.quiet))
        }
        Command::Validate { config } => {
            let report = pipeline::validate(&load(config)?)?;
            if !cli.quiet {
                print!("{}", report.render());
            }
            Ok(ExitStatus::Pass)
        }
        Command::EmitPlots { run_dir, out } => {
            let dir = run_dir.as_ref().unwrap_or(out);
            for f in emit_plots(dir)? {
                if !cli.quiet {
                    println!("wrote {}", f.display());
                }
            }
            Ok(ExitStatus::Pass)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() {
                ExitStatus::ConfigError as u8
            } else {
                0
            });
        }
    };
    let status = run(&cli).unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitStatus::of_error(&e)
    });
    ExitCode::from(status as u8)
}
