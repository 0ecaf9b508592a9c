use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use adamhash::harness::{self, CommandOptions, RunConfig};

/// Hashing-based kernel sum estimators: build, query, attack and mutate.
#[derive(Parser)]
#[command(name = "adamhash", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a structure from the configured dataset and save it.
    Build(Common),
    /// Answer the configured query file and write a report.
    Query(Common),
    /// Run the greedy adaptive adversary against an adam structure.
    Adversary(Common),
    /// Apply an insert/delete script to a saved structure.
    Mutate(Common),
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    config: PathBuf,
    /// Seed override (structure seed for `build`, query seed otherwise).
    #[arg(long)]
    seed: Option<u64>,
    /// Output path override.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(cli: Cli) -> adamhash::Result<()> {
    let (Command::Build(c) | Command::Query(c) | Command::Adversary(c) | Command::Mutate(c)) = &cli.command;
    let cfg = RunConfig::load(&c.config)?;
    let opts = CommandOptions {
        seed: c.seed,
        out: c.out.clone(),
    };
    match cli.command {
        Command::Build(_) => {
            let (path, s) = harness::cmd_build(&cfg, &opts)?;
            println!(
                "built {} structure: n={} hash_evals={} -> {}",
                s.mode(),
                s.dataset().len(),
                s.hash_evals(),
                path.display()
            );
        }
        Command::Query(_) => {
            let (path, report) = harness::cmd_query(&cfg, &opts)?;
            print!("{}", report.summary_text());
            println!("report -> {}", path.display());
        }
        Command::Adversary(_) => {
            let (path, report, _) = harness::cmd_adversary(&cfg, &opts)?;
            print!("{}", report.summary_text());
            println!("report -> {}", path.display());
        }
        Command::Mutate(_) => {
            let (path, records) = harness::cmd_mutate(&cfg, &opts)?;
            let total: u64 = records.iter().map(|r| r.hash_evals).sum();
            println!("applied {} ops, {total} hash evaluations -> {}", records.len(), path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
