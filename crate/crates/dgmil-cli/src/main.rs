//! Batch CLI for the dgmil pipeline.
//!
//! Subcommands: `generate` (synthetic train/test files), `train` (refinement
//! run producing a model bundle plus a per-round log), `eval` (metrics report
//! for a bundle on a test file), `ablate` (ratio/cluster sweeps), `inspect`
//! (summaries of datasets and bundles).
//!
//! Flags override config-file entries, which override defaults; every output
//! embeds the fully resolved configuration. Reports carry no timestamps, so
//! reproducible-mode reruns are byte-identical. Exit codes: 0 success, 1
//! validation error (bad flags, bad config, invalid dataset), 2 runtime error.

mod cfg;
mod ops;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{ArgAction, Args, CommandFactory, FromArgMatches, Parser, Subcommand};

use dgmil::error::Error;

#[derive(Debug, Parser)]
#[command(name = "dgmil", version, about = "Distribution-guided MIL pipeline")]
pub struct Cli {
    /// Flat key=value config file; keys match long flag names.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// RNG seed for everything downstream.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// `reproducible` (bitwise-repeatable) or `fast` (parallel inner loops).
    #[arg(long, global = true, default_value = "reproducible")]
    pub mode: String,

    /// Suppress progress output on stderr.
    #[arg(long, global = true, action = ArgAction::SetTrue)]
    pub quiet: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic train/test pair plus a manifest.
    Generate(GenerateArgs),
    /// Run refinement training and write a model bundle and round log.
    Train(TrainArgs),
    /// Evaluate a bundle on a test file and write a metrics report.
    Eval(EvalArgs),
    /// Train/evaluate across a ratio or cluster grid.
    Ablate(AblateArgs),
    /// Print a summary of a dataset or bundle file.
    Inspect(InspectArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Directory for train.dgmf, test.dgmf, manifest.json.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 32)]
    pub dim: usize,
    #[arg(long, default_value_t = 10)]
    pub phenotypes: usize,
    #[arg(long, default_value_t = 50)]
    pub neg_bags: usize,
    #[arg(long, default_value_t = 50)]
    pub pos_bags: usize,
    #[arg(long, default_value_t = 200)]
    pub bag_size: usize,
    #[arg(long, default_value_t = 0.05)]
    pub witness_rate: f64,
    #[arg(long, default_value_t = 8.0)]
    pub separation: f64,
    #[arg(long, default_value_t = false, action = ArgAction::Set)]
    pub entangle: bool,
    #[arg(long, default_value_t = 0)]
    pub distractor_dims: usize,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Training feature file (DGMF or CSV).
    #[arg(long)]
    pub train: Option<PathBuf>,
    /// Output model bundle (JSON).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-round JSON-lines log (default: <out>.rounds.jsonl).
    #[arg(long)]
    pub log: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    pub clusters: usize,
    #[arg(long, default_value_t = 0.10)]
    pub ratio: f64,
    #[arg(long, default_value_t = 20)]
    pub max_rounds: usize,
    #[arg(long, default_value_t = 200)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.01)]
    pub lr: f64,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub bundle: Option<PathBuf>,
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// Metrics report output (single JSON line).
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Optional CSV of ROC/FROC curve points.
    #[arg(long)]
    pub curves: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    #[arg(long)]
    pub train: Option<PathBuf>,
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// Sweep axis: `ratio` or `clusters`.
    #[arg(long)]
    pub axis: Option<String>,
    /// Comma-separated grid values (defaults depend on the axis).
    #[arg(long)]
    pub values: Option<String>,
    #[arg(long)]
    pub out_csv: Option<PathBuf>,
    #[arg(long)]
    pub out_json: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    pub clusters: usize,
    #[arg(long, default_value_t = 0.10)]
    pub ratio: f64,
    #[arg(long, default_value_t = 20)]
    pub max_rounds: usize,
    #[arg(long, default_value_t = 200)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.01)]
    pub lr: f64,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    /// Dataset (.dgmf/.csv) or bundle (.json) to summarize.
    pub path: PathBuf,
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::InvalidData(_) => 1,
        _ => 2,
    }
}

fn print_error(err: &Error) {
    eprintln!("error: {err}");
    let mut source = std::error::Error::source(err);
    while let Some(s) = source {
        eprintln!("  caused by: {s}");
        source = s.source();
    }
}

fn main() -> ExitCode {
    let command = Cli::command();
    let matches = match command.try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = e.print();
                    ExitCode::SUCCESS
                }
                // Flag problems are validation errors.
                _ => {
                    let _ = e.print();
                    ExitCode::from(1)
                }
            };
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match ops::dispatch(&cli, &matches) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            print_error(&e);
            ExitCode::from(exit_code_for(&e))
        }
    }
}
