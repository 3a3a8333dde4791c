use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use csa_cli::{run, CliError, RunConfig};

/// Sharp causal-effect bounds under marginal sensitivity models.
#[derive(Parser, Debug)]
#[command(name = "csa", version, about)]
struct Args {
    /// Path to the JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Override the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Thread count for parallel loops.
    #[arg(long)]
    threads: Option<usize>,
    /// Override the configured output path.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn execute(args: Args) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::Config(format!("{}: {e}", args.config.display())))?;
    let mut cfg = RunConfig::from_json(&text)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(threads) = args.threads {
        cfg.threads = Some(threads);
    }
    if let Some(output) = args.output {
        cfg.output = Some(output);
    }
    run(&cfg)
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("csa: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
