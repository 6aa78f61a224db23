//! File formats, experiment configuration and orchestration for the
//! `witten-lab` command line tool. All numerics live in `witten-core`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod formats;
pub mod output;
pub mod run;

pub use config::{load, Command, Loaded};
pub use error::{LabError, Result};
pub use output::OutputDir;

/// Loads `config`, checks it is meant for `expected`, runs it and writes into
/// `out`. Returns the files written.
pub fn execute(
    expected: Command,
    config: &std::path::Path,
    out: &std::path::Path,
    seed: Option<u64>,
) -> Result<Vec<std::path::PathBuf>> {
    let cfg = load(config, seed)?;
    if cfg.command != expected {
        return Err(LabError::Config(format!(
            "config is for '{}' but the '{}' subcommand was invoked",
            cfg.command.as_str(),
            expected.as_str()
        )));
    }
    let mut dir = OutputDir::create(out)?;
    run::run(&cfg, &mut dir)?;
    Ok(dir.written().to_vec())
}
