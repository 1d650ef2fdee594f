//! `flost`: generate, sample, tune, fit and evaluate from the command line.
//!
//! Every stage reads and writes files, so a pipeline can be replayed from its
//! inputs and seeds alone. Progress and timings go to stderr.

mod commands;
mod failure;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::failure::Failure;

#[derive(Parser, Debug)]
#[command(
    name = "flost",
    version,
    about = "Fourier low-rank plus sparse tensor completion"
)]
struct Cli {
    /// Worker threads (0 uses every core). Never changes numeric output.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Draw a random structured ground-truth tensor.
    Generate(GenerateArgs),
    /// Project an existing tensor onto the structured set.
    Truncate(TruncateArgs),
    /// Bernoulli-sample noisy entries of a tensor.
    Sample(SampleArgs),
    /// Fit the estimator to an observation file.
    Fit(FitArgs),
    /// Grid-search the threshold scales on a held-out part of the observations.
    Tune(TuneArgs),
    /// RMSE report of an estimate against the truth.
    Evaluate(EvaluateArgs),
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[arg(long)]
    m: usize,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    t: usize,
    /// Rank of each low-frequency slice.
    #[arg(long)]
    rank: usize,
    /// Number of low-rank frequency slices.
    #[arg(long)]
    k: usize,
    /// Nonzero high-frequency coefficients (default: 10% of them).
    #[arg(long)]
    sparsity: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct TruncateArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    rank: usize,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    sparsity: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Noise {
    Gaussian,
    Uniform,
}

#[derive(Args, Debug)]
struct SampleArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    p: f64,
    /// Noise standard deviation.
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
    #[arg(long, value_enum, default_value_t = Noise::Gaussian)]
    noise: Noise,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

/// Constants of the default threshold schedule.
#[derive(Args, Debug, Clone)]
struct ScheduleArgs {
    #[arg(long, default_value_t = 1.0)]
    c1: f64,
    #[arg(long, default_value_t = 1.0)]
    c2: f64,
    /// Noise/magnitude scale (default: largest observed magnitude).
    #[arg(long)]
    sigma_gamma: Option<f64>,
}

#[derive(Args, Debug)]
struct FitArgs {
    #[arg(long)]
    obs: PathBuf,
    #[arg(long)]
    k: usize,
    /// Multiplier on the scheduled low-rank threshold.
    #[arg(long, conflicts_with_all = ["lambda1", "lambda2"])]
    lambda1_scale: Option<f64>,
    /// Multiplier on the scheduled sparse threshold.
    #[arg(long, conflicts_with_all = ["lambda1", "lambda2"])]
    lambda2_scale: Option<f64>,
    /// Absolute low-rank threshold, used for every low-rank slice.
    #[arg(long, requires = "lambda2")]
    lambda1: Option<f64>,
    /// Absolute sparse threshold.
    #[arg(long, requires = "lambda1")]
    lambda2: Option<f64>,
    #[command(flatten)]
    schedule: ScheduleArgs,
    /// Override the sampling rate stored in the observation file.
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    out_tensor: PathBuf,
    #[arg(long)]
    out_model: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TuneArgs {
    #[arg(long)]
    obs: PathBuf,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
    grid_log_min: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    grid_log_max: f64,
    #[arg(long, default_value_t = 5)]
    grid_steps: usize,
    #[arg(long, default_value_t = 0.1)]
    holdout: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    schedule: ScheduleArgs,
    #[arg(long)]
    p: Option<f64>,
    /// JSON with the selected configuration and the full table.
    #[arg(long)]
    report: PathBuf,
    /// Also write the table as `scale1,scale2,validation_rmse` CSV.
    #[arg(long)]
    table: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    #[arg(long)]
    estimate: PathBuf,
    #[arg(long)]
    truth: PathBuf,
    /// Observation file defining the train (observed) and test (missing) sets.
    #[arg(long)]
    obs: PathBuf,
    #[arg(long)]
    chunk_len: Option<usize>,
    #[arg(long, value_delimiter = ',', default_value = "0,0.75,0.95,0.99")]
    quantiles: Vec<f64>,
    /// Model file whose parameter count and fit time are copied into the report.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    report: PathBuf,
}

fn run(cli: Cli) -> Result<(), Failure> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build_global()
        .map_err(|e| Failure::usage(format!("cannot start {} threads: {e}", cli.threads)))?;
    match cli.command {
        Command::Generate(a) => commands::generate(a),
        Command::Truncate(a) => commands::truncate(a),
        Command::Sample(a) => commands::sample(a),
        Command::Fit(a) => commands::fit(a),
        Command::Tune(a) => commands::tune(a),
        Command::Evaluate(a) => commands::evaluate(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("flost: {}", f.message.replace('\n', " "));
            ExitCode::from(f.code)
        }
    }
}
