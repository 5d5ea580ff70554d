//! `lamedtn run <config.json> [--out DIR] [--seed S] [--mesh-level n]`
//!
//! The only environment override is `LAMEDTN_THREADS` (worker thread count).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lame_dtn::cli::{exit_code, run, RunOptions};
use lame_dtn::exec::configure_threads_from_env;

#[derive(Parser)]
#[command(name = "lamedtn", version, about = "Forward, DtN, reconstruction and probe experiments for the layered Lamé system")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the task described by a JSON config.
    Run {
        config: PathBuf,
        /// Output directory (overrides the config's `output`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Global seed (overrides the config's `seed`).
        #[arg(long)]
        seed: Option<u64>,
        /// Mesh resolution (overrides `mesh.n`).
        #[arg(long = "mesh-level")]
        mesh_level: Option<usize>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let threads = configure_threads_from_env();
    log::info!("using {threads} worker threads");
    match cli.command {
        Command::Run { config, out, seed, mesh_level } => match run(&config, &RunOptions { out, seed, mesh_level }) {
            Ok(summary) => {
                println!("{}", summary.line);
                if summary.ok {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(2)
                }
            }
            Err(e) => {
                eprintln!("error [{}] {}: {e}", e.module(), e.code());
                ExitCode::from(exit_code(&e) as u8)
            }
        },
    }
}
