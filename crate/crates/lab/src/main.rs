use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use witten_lab::Command;

#[derive(Parser)]
#[command(name = "witten-lab", version, about = "Spectral shift functions and Witten indices from JSON experiment configs")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Spectral shift function of a matrix pair by several routes
    Ssf(Common),
    /// Dirac example: ξ under the χ_n cutoff and the Witten index
    Dirac(Common),
    /// Cutoff convergence tables for a path
    Converge(Common),
    /// Hypothesis diagnostics and structural residuals of a model
    Check(Common),
    /// Witten index from a spectral shift function, optionally with Δ_r
    Witten(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment config (JSON with a "command" field)
    #[arg(long)]
    config: PathBuf,
    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads; all cores when omitted
    #[arg(long)]
    threads: Option<usize>,
    /// Overrides the config seed
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Sub::Ssf(a) => (Command::Ssf, a),
        Sub::Dirac(a) => (Command::Dirac, a),
        Sub::Converge(a) => (Command::Converge, a),
        Sub::Check(a) => (Command::Check, a),
        Sub::Witten(a) => (Command::Witten, a),
    };
    if let Some(n) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    match witten_lab::execute(command, &args.config, &args.out, args.seed) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
