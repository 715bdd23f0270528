//! Thin command-line front end over the experiment driver: each subcommand
//! reads one config file and writes its artifacts and report into the output
//! directory.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use semiqed::driver::{run, CommandName, RunConfig};

#[derive(Parser)]
#[command(name = "semiqed", version, about = "Semiclassical spin-boson workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a mode model file and its coupling-decay table.
    BuildModes(CommonArgs),
    /// Solve the transport hierarchy and export trajectories.
    Expand(CommonArgs),
    /// Semiclassical convergence study against the exact propagator.
    Compare(CommonArgs),
    /// Coherent-state transition bound study.
    Transition(CommonArgs),
    /// Run the invariant check suite.
    Checks(CommonArgs),
}

#[derive(clap::Args)]
struct CommonArgs {
    /// Path to the run configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory override.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed override for randomized sampling.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (expected, args) = match &cli.command {
        Command::BuildModes(a) => (CommandName::BuildModes, a),
        Command::Expand(a) => (CommandName::Expand, a),
        Command::Compare(a) => (CommandName::Compare, a),
        Command::Transition(a) => (CommandName::Transition, a),
        Command::Checks(a) => (CommandName::Checks, a),
    };

    let config = match RunConfig::from_file(&args.config) {
        Ok(c) => c,
        Err(err) => {
            eprintln!("semiqed: failed to read config: {err}");
            return ExitCode::from(2);
        }
    };
    if config.command != expected {
        eprintln!(
            "semiqed: config declares command `{}` but the CLI invoked `{}`",
            config.command.as_str(),
            expected.as_str()
        );
        return ExitCode::from(2);
    }

    match run(&config, args.out.as_deref(), args.seed) {
        Ok(report) => {
            for check in &report.checks {
                let status = if check.passed { "PASS" } else { "FAIL" };
                println!(
                    "[{status}] {}: measured {:.6e} vs {} {:.6e}",
                    check.name, check.measured, check.comparison, check.threshold
                );
            }
            println!("wall clock: {:.3} s", report.wall_clock_seconds);
            if report.passed {
                println!("report: all {} checks passed", report.checks.len());
                ExitCode::SUCCESS
            } else {
                if let Some(stage) = &report.failure_stage {
                    eprintln!("semiqed: failed at stage: {stage}");
                }
                ExitCode::FAILURE
            }
        }
        Err(err) => {
            eprintln!("semiqed: {err}");
            ExitCode::from(2)
        }
    }
}
