//! `gsmi`: generate datasets, build indexes, answer reverse top-k queries and
//! select influential POIs.

mod bench;
mod commands;
mod ids;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "gsmi",
    version,
    about = "Influence-maximizing POI selection over geo-social data"
)]
struct Cli {
    /// Worker threads for parallel phases (default: all cores).
    #[arg(long, global = true, env = "GSMI_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset bundle.
    Gen(commands::GenArgs),
    /// Build and save an index for a dataset.
    BuildIndex(commands::BuildIndexArgs),
    /// Reverse top-k users of candidate POIs.
    Brknn(commands::BrknnArgs),
    /// Select b POIs with one of the solvers or baseline policies.
    Solve(commands::SolveArgs),
    /// Brute-force reference answers.
    #[command(subcommand)]
    Oracle(commands::OracleCommand),
    /// Sweep one parameter and report runtime and influence per method.
    Bench(bench::BenchArgs),
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<gsmi_core::Error>() {
            return if e.is_data_error() { 2 } else { 1 };
        }
        if cause.is::<std::io::Error>() || cause.is::<serde_json::Error>() {
            return 2;
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match cli.command {
        Command::Gen(a) => commands::gen(a),
        Command::BuildIndex(a) => commands::build_index(a),
        Command::Brknn(a) => commands::brknn(a),
        Command::Solve(a) => commands::solve(a),
        Command::Oracle(c) => commands::oracle(c),
        Command::Bench(a) => bench::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
