use std::path::PathBuf;
use std::process::ExitCode;

use carnot_kit::catalog::list_catalog;
use carnot_kit::params::Params;
use carnot_kit::{execute, ExperimentConfig};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "carnot-kit", version, about = "Verification suites for Carnot-group computations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one suite and write its report files.
    Run {
        /// Catalog group name (e.g. heisenberg1, engel, euclidean3).
        #[arg(long)]
        group: Option<String>,
        /// Group definition JSON; overrides --group.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory; nothing is written without it.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        depth: Option<u32>,
        #[arg(long)]
        samples: Option<usize>,
        /// Suite parameter, repeatable.
        #[arg(long = "params", value_name = "KEY=VALUE")]
        params: Vec<String>,
    },
    /// Print the shipped groups with their homogeneous dimension.
    List,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match cli.command {
        Command::List => {
            for e in list_catalog() {
                println!("{} Q={}", e.name, e.q);
            }
            ExitCode::SUCCESS
        }
        Command::Run { group, spec, suite, seed, out, depth, samples, params } => {
            let params = match Params::parse(params.iter().map(String::as_str)) {
                Ok(p) => p.values().clone(),
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            };
            let config = ExperimentConfig { group, spec, suite, seed, out, depth, samples, params };
            ExitCode::from(execute(&config) as u8)
        }
    }
}
