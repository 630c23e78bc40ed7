//! `ev` — reproducible data-valuation runs from the command line.

mod commands;
mod outio;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use ev_core::EvError;

#[derive(Parser)]
#[command(name = "ev", version, about = "Spectral data valuation toolkit")]
struct Cli {
    /// Worker threads (falls back to the EV_THREADS environment variable).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score a dataset with a valuer, optionally combined with the spectral
    /// term.
    Value(ValueArgs),
    /// Generate a synthetic ID/OOD pair with matching marginals.
    Synth(SynthArgs),
    /// Data-removal protocol: drop the top-valued fraction and test on
    /// shifted data.
    Remove(RemoveArgs),
    /// Point-addition protocol: grow the training set by value rank.
    Add(AddArgs),
    /// Ranking-stability protocol under small training-set perturbations.
    Stability(StabilityArgs),
    /// Wall-clock comparison of the valuers.
    Timing(TimingArgs),
    /// Variance gap of top- vs bottom-valued points in the leading
    /// principal subspace.
    PcaGap(PcaGapArgs),
}

/// Flags shared by every valuer invocation.
#[derive(Args, Serialize, Clone)]
struct ValuerArgs {
    /// One of: random, index, knn-shapley, data-oob, ev-approx, ev-exact.
    #[arg(long, default_value = "random")]
    valuer: String,
    /// Combination weight for the spectral term, in [0, 1].
    #[arg(long, default_value_t = 0.0)]
    w: f64,
    /// Neighborhood size for knn-shapley.
    #[arg(long, default_value_t = 1000)]
    k: usize,
    /// Bagged model count for data-oob.
    #[arg(long, default_value_t = 800)]
    num_models: usize,
    /// Training epochs per bagged model.
    #[arg(long, default_value_t = 10)]
    oob_epochs: usize,
    /// Learning rate per bagged model.
    #[arg(long, default_value_t = 0.01)]
    oob_lr: f64,
    /// Regularize a singular covariance instead of failing.
    #[arg(long, default_value_t = false)]
    ridge: bool,
}

/// Classifier flags shared by the training protocols.
#[derive(Args, Serialize, Clone)]
struct ClassifierArgs {
    #[arg(long, default_value_t = 30)]
    epochs: usize,
    #[arg(long, default_value_t = 0.01)]
    lr: f64,
}

#[derive(Args, Serialize)]
struct ValueArgs {
    /// Dataset to score (EVDS or CSV).
    #[arg(long)]
    input: String,
    /// Validation set, required by knn-shapley.
    #[arg(long)]
    val: Option<String>,
    /// evds | csv | auto (by extension).
    #[arg(long, default_value = "auto")]
    format: String,
    #[command(flatten)]
    #[serde(flatten)]
    valuer: ValuerArgs,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out: String,
}

#[derive(Args, Serialize)]
struct SynthArgs {
    #[arg(long, default_value_t = 2000)]
    n_id: usize,
    #[arg(long, default_value_t = 1000)]
    n_ood: usize,
    #[arg(long, default_value_t = 32)]
    d: usize,
    #[arg(long, default_value_t = 3)]
    classes: usize,
    /// Off-diagonal shift strength.
    #[arg(long, default_value_t = 0.3)]
    shift: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    out: String,
}

#[derive(Args, Serialize)]
struct RemoveArgs {
    #[arg(long)]
    train: String,
    #[arg(long)]
    val: Option<String>,
    /// Shifted test set.
    #[arg(long)]
    test: String,
    #[arg(long, default_value = "auto")]
    format: String,
    #[command(flatten)]
    #[serde(flatten)]
    valuer: ValuerArgs,
    #[command(flatten)]
    #[serde(flatten)]
    classifier: ClassifierArgs,
    /// Fraction of highest-valued points to drop.
    #[arg(long, default_value_t = 0.5)]
    fraction: f64,
    /// Subsample this many training points per seed before scoring.
    #[arg(long)]
    sample_train: Option<usize>,
    /// Comma-separated seed list.
    #[arg(long, default_value = "42", value_delimiter = ',')]
    seeds: Vec<u64>,
    #[arg(long)]
    out: String,
}

#[derive(Args, Serialize)]
struct AddArgs {
    /// Fixed initial training set; alternatively use --train with
    /// --initial-size.
    #[arg(long)]
    initial: Option<String>,
    /// Candidate pool ranked by value.
    #[arg(long)]
    pool: Option<String>,
    /// Source set to split when --initial/--pool are not given.
    #[arg(long)]
    train: Option<String>,
    /// Size of the seeded initial split of --train.
    #[arg(long)]
    initial_size: Option<usize>,
    #[arg(long)]
    val: Option<String>,
    #[arg(long)]
    test: String,
    #[arg(long, default_value = "auto")]
    format: String,
    #[command(flatten)]
    #[serde(flatten)]
    valuer: ValuerArgs,
    #[command(flatten)]
    #[serde(flatten)]
    classifier: ClassifierArgs,
    /// Comma-separated pool prefix sizes to retrain at.
    #[arg(long, value_delimiter = ',')]
    steps: Vec<usize>,
    /// Seed for the --train split.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Comma-separated valuer seeds.
    #[arg(long, default_value = "42", value_delimiter = ',')]
    seeds: Vec<u64>,
    #[arg(long)]
    out: String,
}

#[derive(Args, Serialize)]
struct StabilityArgs {
    /// Source set; needs pool + (pool-fixed)*repeats points.
    #[arg(long)]
    source: String,
    #[arg(long)]
    val: Option<String>,
    #[arg(long, default_value = "auto")]
    format: String,
    #[command(flatten)]
    #[serde(flatten)]
    valuer: ValuerArgs,
    #[arg(long, default_value_t = 300)]
    pool: usize,
    #[arg(long, default_value_t = 290)]
    fixed: usize,
    #[arg(long, default_value_t = 5)]
    repeats: usize,
    /// Comma-separated meta-seeds.
    #[arg(long, default_value = "42", value_delimiter = ',')]
    seeds: Vec<u64>,
    #[arg(long)]
    out: String,
}

#[derive(Args, Serialize)]
struct TimingArgs {
    #[arg(long)]
    train: String,
    #[arg(long, default_value = "auto")]
    format: String,
    #[command(flatten)]
    #[serde(flatten)]
    valuer: ValuerArgs,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    out: String,
}

#[derive(Args, Serialize)]
struct PcaGapArgs {
    #[arg(long)]
    input: String,
    /// Scores file produced by `ev value`.
    #[arg(long)]
    values: String,
    #[arg(long, default_value = "auto")]
    format: String,
    #[arg(long, default_value_t = 0.5)]
    top_fraction: f64,
    #[arg(long)]
    out: String,
}

fn exit_code_for(err: &EvError) -> u8 {
    match err {
        EvError::Io(_)
        | EvError::BadMagic { .. }
        | EvError::BadVersion { .. }
        | EvError::TruncatedFile { .. }
        | EvError::RaggedRows { .. }
        | EvError::ParseField { .. }
        | EvError::LabelOutOfRange { .. } => 2,
        EvError::SingularCovariance { .. } => 3,
        _ => 1,
    }
}

fn configure_threads(requested: Option<usize>) {
    let from_env = std::env::var("EV_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok());
    if let Some(threads) = requested.or(from_env) {
        // Ignore the error if a global pool already exists.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_threads(cli.threads);
    let result = match cli.command {
        Command::Value(args) => commands::cmd_value(&args),
        Command::Synth(args) => commands::cmd_synth(&args),
        Command::Remove(args) => commands::cmd_remove(&args),
        Command::Add(args) => commands::cmd_add(&args),
        Command::Stability(args) => commands::cmd_stability(&args),
        Command::Timing(args) => commands::cmd_timing(&args),
        Command::PcaGap(args) => commands::cmd_pca_gap(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("ev: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
