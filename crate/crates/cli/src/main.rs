//! `lcp`: constraint checking, compensation, training, and matcher-score
//! reports from the command line.
//!
//! Exit status is 0 on success, 1 on a domain error (one line on stderr,
//! starting with a stable code such as `E_SYNTAX`), and 2 on a usage error.
//! Log verbosity comes from `LCP_LOG` (for example `LCP_LOG=debug`).

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lcp_core::audit::DEFAULT_THRESHOLD;
use lcp_core::recognition::{DEFAULT_MIN_CONFIDENCE, DEFAULT_TARGET_FMR};

#[derive(Debug, Parser)]
#[command(name = "lcp", version, about = "Logical-consistency toolkit for multi-label attribute predictions")]
struct Cli {
    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    threads: Option<u16>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse and check a constraint document.
    SchemaValidate {
        #[arg(long)]
        schema: String,
        /// Write the canonical form of the document here.
        #[arg(long)]
        canonical: Option<PathBuf>,
    },
    /// Classify every prediction row as consistent, incomplete, or impossible.
    Audit {
        #[command(flatten)]
        input: ScoreInput,
        /// Write the report as JSON here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fill empty exhaustive groups with their highest-scoring member.
    Compensate {
        #[command(flatten)]
        input: ScoreInput,
        /// Output CSV of 0/1 predictions.
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a classifier and write its checkpoint.
    Train(TrainArgs),
    /// Score a feature CSV with a trained checkpoint.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        features: PathBuf,
        #[arg(long, default_value = "builtin:fh37k")]
        schema: String,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        threshold: f64,
        /// Output CSV of probabilities.
        #[arg(long)]
        scores_out: PathBuf,
        /// Output CSV of thresholded predictions.
        #[arg(long)]
        preds_out: Option<PathBuf>,
        /// Also write compensated predictions here.
        #[arg(long)]
        compensated_out: Option<PathBuf>,
    },
    /// Per-attribute accuracies of predictions against labels.
    Metrics {
        #[arg(long)]
        schema: String,
        #[arg(long)]
        preds: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long, value_enum, default_value_t = MetricsMode::Both)]
        mode: MetricsMode,
        /// Write the reports as JSON here; the table always goes to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// False-match rates by beard-area pair category.
    FmrReport(FmrArgs),
    /// Generate synthetic inputs.
    #[command(subcommand)]
    Synth(SynthCommand),
}

#[derive(Debug, Args)]
struct ScoreInput {
    /// `builtin:fh37k` or a path to a constraint document.
    #[arg(long)]
    schema: String,
    /// CSV with an `id` column followed by one column per attribute.
    #[arg(long)]
    scores: PathBuf,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    threshold: f64,
    /// The input already holds 0/1 predictions; skip thresholding.
    #[arg(long)]
    binary: bool,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Run configuration (`key = value` lines).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Checkpoint output path.
    #[arg(long)]
    out: PathBuf,
    /// Per-epoch log as JSON lines.
    #[arg(long)]
    log: Option<PathBuf>,
    /// Overrides the configured training seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Training features; synthetic data from the configuration is used when
    /// absent.
    #[arg(long, requires = "labels")]
    features: Option<PathBuf>,
    #[arg(long, requires = "features")]
    labels: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FmrArgs {
    #[arg(long)]
    embeddings: PathBuf,
    #[arg(long, default_value_t = DEFAULT_MIN_CONFIDENCE)]
    min_conf: f64,
    /// Demographic whose impostor scores set the threshold.
    #[arg(long, default_value = "WM")]
    reference: String,
    #[arg(long, default_value_t = DEFAULT_TARGET_FMR)]
    target_fmr: f64,
    /// JSON report path; stdout gets the table.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the table to this file.
    #[arg(long)]
    table: Option<PathBuf>,
    /// Score histograms as CSV.
    #[arg(long)]
    histograms: Option<PathBuf>,
    #[arg(long, default_value_t = 40)]
    bins: usize,
}

#[derive(Debug, Subcommand)]
enum SynthCommand {
    /// Consistent multi-label data as feature and label CSVs per split.
    Data {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Clustered face-embedding stand-ins in the EMB1 format.
    Embeddings {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 200)]
        identities: usize,
        #[arg(long, default_value_t = 6)]
        images: usize,
        #[arg(long, default_value_t = 64)]
        dim: usize,
        #[arg(long, default_value_t = 4)]
        demographics: u8,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MetricsMode {
    Plain,
    Enforced,
    Both,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("LCP_LOG", "warn")).init();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n as usize).build_global() {
            log::warn!("thread pool already initialised: {e}");
        }
    }
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}: {}", e.code(), e);
            ExitCode::from(1)
        }
    }
}
