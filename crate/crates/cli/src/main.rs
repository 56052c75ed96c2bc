use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod bench;
mod io;
mod separate;

/// Independent component analysis by minimum discrimination information.
#[derive(Debug, Parser)]
#[command(name = "mdiica", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Unmix a CSV data matrix
    Separate(separate::SeparateArgs),
    /// Run a synthetic separation study
    Bench(bench::BenchArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Separate(args) => separate::run(args),
        Command::Bench(args) => bench::run(args),
    };
    outcome.unwrap_or_else(|err| {
        eprintln!("error: {err:#}");
        ExitCode::from(1)
    })
}
