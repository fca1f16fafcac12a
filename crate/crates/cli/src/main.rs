//! `rocket-forge` command-line entry point.
//!
//! Exit codes: 0 on success, 1 for runtime or data errors, 2 for usage
//! errors.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "rocket-forge", version, about = "Random convolutional kernel transform workflows")]
pub struct Cli {
    /// Cap on transform worker threads (default: all cores).
    #[arg(long, global = true, env = "ROCKET_FORGE_WORKERS")]
    pub workers: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a random kernel bank and save it as JSON.
    GenKernels(GenKernelsArgs),
    /// Generate a synthetic laser-reflection dataset (RKDS + labels CSV).
    Synth(SynthArgs),
    /// Normalize, transform, fit ridge, and evaluate on a held-out split.
    Pipeline(PipelineArgs),
    /// Evaluate a range of soft PPV steepness values against hard PPV.
    LambdaSweep(LambdaSweepArgs),
    /// Time the transform over a sweep of batch sizes.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct GenKernelsArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 10_000)]
    pub num_kernels: usize,
    #[arg(long)]
    pub input_length: usize,
    #[arg(long, default_value_t = 1)]
    pub channels: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// JSON synthetic-data config; the flags below override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub n_samples: Option<usize>,
    #[arg(long)]
    pub channels: Option<usize>,
    #[arg(long)]
    pub timesteps: Option<usize>,
    /// Writes `<prefix>.rkds`, `<prefix>.labels.csv`, `<prefix>.manifest.json`.
    #[arg(long)]
    pub out_prefix: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PoolingArg {
    Hard,
    Soft,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// JSON synthetic-data config (defaults apply when no data source is given).
    #[arg(long, conflicts_with = "data")]
    pub synth_config: Option<PathBuf>,
    /// RKDS series file; requires --labels.
    #[arg(long, requires = "labels")]
    pub data: Option<PathBuf>,
    #[arg(long, requires = "data")]
    pub labels: Option<PathBuf>,
    /// Kernel bank JSON; generated from --kernel-seed when omitted.
    #[arg(long)]
    pub kernels: Option<PathBuf>,
    #[arg(long, default_value_t = 2_000)]
    pub num_kernels: usize,
    #[arg(long, default_value_t = 0)]
    pub kernel_seed: u64,
    /// Seed for the train/test split.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Fraction of examples used for training.
    #[arg(long, default_value_t = 0.9)]
    pub train_test_split: f64,
    /// Candidate ridge penalties (default: 10 values from 1e-3 to 1e3).
    #[arg(long, value_delimiter = ',')]
    pub alphas: Option<Vec<f64>>,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum, default_value_t = PoolingArg::Hard)]
    pub pooling: PoolingArg,
    #[arg(long, default_value_t = 4.0)]
    pub lambda: f32,
    #[arg(long, default_value_t = 3.0, allow_negative_numbers = true)]
    pub shift: f32,
    /// Drop the max-pool feature (PPV only).
    #[arg(long)]
    pub no_max: bool,
}

#[derive(Debug, Args)]
pub struct LambdaSweepArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,8,16,64,256,1000")]
    pub lambdas: Vec<f32>,
    #[arg(long, default_value_t = 3.0, allow_negative_numbers = true)]
    pub shift: f32,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "1,2,4,8,16,32,64")]
    pub batch_sizes: Vec<usize>,
    #[arg(long, default_value_t = 3)]
    pub repeats: usize,
    #[arg(long, default_value_t = 2)]
    pub warmup: usize,
    #[arg(long, default_value_t = 10_000)]
    pub num_kernels: usize,
    #[arg(long, default_value_t = 20)]
    pub channels: usize,
    #[arg(long, default_value_t = 2_000)]
    pub timesteps: usize,
    #[arg(long, value_enum, default_value_t = PoolingArg::Hard)]
    pub pooling: PoolingArg,
    #[arg(long, default_value_t = 4.0)]
    pub lambda: f32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 4096)]
    pub memory_budget_mb: u64,
    #[arg(long)]
    pub out_dir: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
