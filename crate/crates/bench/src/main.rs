// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use ppg_bench::checks::run_checks;
use ppg_bench::{emit_report, generate_instances, parse_config, run_suite, to_csv, to_pretty, ReportFormat};

#[derive(Parser)]
#[command(name = "bench", about = "Run the PPG benchmark experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every configured solver and print CSV plus a table.
    Run { config: PathBuf },
    /// Generate and save the configured instances without solving.
    Gen { config: PathBuf },
    /// Run the quick invariant suite.
    Check,
}

fn run(config: PathBuf) -> anyhow::Result<()> {
    let cfg = parse_config(&config)?;
    let rows = run_suite(&cfg)?;
    print!("{}", to_csv(&rows));
    println!();
    print!("{}", to_pretty(&rows));
    if let Some(path) = &cfg.output {
        emit_report(&rows, ReportFormat::Csv, path).with_context(|| format!("writing {}", path.display()))?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn gen(config: PathBuf) -> anyhow::Result<()> {
    let cfg = parse_config(&config)?;
    for path in generate_instances(&cfg)? {
        println!("{}", path.display());
    }
    Ok(())
}

fn check() -> anyhow::Result<()> {
    let mut failed = 0;
    for c in run_checks() {
        match c.outcome {
            Ok(detail) => println!("ok    {}: {detail}", c.name),
            Err(why) => {
                failed += 1;
                println!("FAIL  {}: {why}", c.name);
            }
        }
    }
    anyhow::ensure!(failed == 0, "{failed} check(s) failed");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config } => run(config),
        Command::Gen { config } => gen(config),
        Command::Check => check(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
