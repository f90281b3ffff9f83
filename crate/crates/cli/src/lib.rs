//! The `sentgraph` command line: dataset generation, trail encoding,
//! training, constrained sampling, evaluation and the SET ablation.

pub mod cmd;
pub mod config;
pub mod error;
pub mod pipeline;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::cmd::data::{CalibrateSbmFlags, DecodeFlags, EncodeFlags, GenDataFlags};
use crate::cmd::eval::{AblateFlags, EvalFlags};
use crate::cmd::model::{SampleFlags, TrainFlags};
use crate::config::ConfigFile;
pub use crate::error::{CliError, Result};

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "SENTGRAPH_THREADS";

#[derive(Debug, Parser)]
#[command(name = "sentgraph", version, about = "Graph generation with trail-encoded language models")]
pub struct Cli {
    /// TOML file with a table per subcommand; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset and its token corpus.
    GenData(GenDataFlags),
    /// Encode graphs into a token corpus.
    Encode(EncodeFlags),
    /// Decode a token corpus back into graphs.
    Decode(DecodeFlags),
    /// Train a model on a token corpus.
    Train(TrainFlags),
    /// Sample graphs from a checkpoint, optionally conditioned on a prefix or motif.
    Sample(SampleFlags),
    /// Compare generated graphs with train and test sets.
    Eval(EvalFlags),
    /// Train, sample and evaluate with both trail encodings.
    Ablate(AblateFlags),
    /// Measure how often the SBM checker accepts fresh SBM draws.
    CalibrateSbm(CalibrateSbmFlags),
}

pub const SECTIONS: [&str; 8] = ["gen-data", "encode", "decode", "train", "sample", "eval", "ablate", "calibrate-sbm"];

pub fn run(cli: &Cli) -> Result<()> {
    let file = match &cli.config {
        Some(path) => ConfigFile::load(path, &SECTIONS)?,
        None => ConfigFile::default(),
    };
    match &cli.command {
        Command::GenData(f) => cmd::data::gen_data(&file.resolve("gen-data", f)?),
        Command::Encode(f) => cmd::data::encode(&file.resolve("encode", f)?),
        Command::Decode(f) => cmd::data::decode(&file.resolve("decode", f)?),
        Command::Train(f) => cmd::model::train(&file.resolve("train", f)?),
        Command::Sample(f) => cmd::model::sample(&file.resolve("sample", f)?),
        Command::Eval(f) => cmd::eval::eval(&file.resolve("eval", f)?),
        Command::Ablate(f) => cmd::eval::ablate(&file.resolve("ablate", f)?),
        Command::CalibrateSbm(f) => cmd::data::calibrate_sbm(&file.resolve("calibrate-sbm", f)?),
    }
}

/// Sizes the global thread pool from [`THREADS_ENV`] when it is set.
pub fn init_threads() -> Result<()> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = value
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::config(format!("{THREADS_ENV} must be a positive integer, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::config(format!("cannot size the thread pool: {e}")))
}
