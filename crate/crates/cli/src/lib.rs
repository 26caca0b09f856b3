//! `dialsum` command line: one subcommand per pipeline stage.
//!
//! Every subcommand writes its outputs plus a `manifest.json` into `--out`.
//! Exit codes: 0 success, 1 data error, 2 usage error.

mod cmd;
mod manifest;

use std::ffi::OsString;
use std::fmt::Display;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use manifest::{FileDigest, Manifest, MANIFEST_FILE};

pub const DEFAULT_SEED: u64 = dialsum_core::seed::DEFAULT_SEEDS[0];

#[derive(Debug, Parser)]
#[command(
    name = "dialsum",
    version,
    about = "Dialogue summarization corpus pipeline"
)]
struct Cli {
    /// Worker threads for parallel stages (0 = one per core). Outputs do not
    /// depend on this value.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Convert raw per-dataset files into the corpus format.
    Ingest(IngestArgs),
    /// Drop short dialogues and near-duplicates, including evaluation overlap.
    Clean(CleanArgs),
    /// Replace role tables with names from a pool.
    Roles(RolesArgs),
    /// Role-replaced copies of a corpus.
    Augment(AugmentArgs),
    /// Request summaries from a chat-completion endpoint.
    Annotate(AnnotateArgs),
    /// Emit denoising pre-training pairs.
    Noise(NoiseArgs),
    /// Corpus and per-dataset statistics.
    Stats(StatsArgs),
    /// Score candidate summaries against references.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
struct IngestArgs {
    /// Raw input file; pair each with a `--spec`.
    #[arg(long = "input", required = true)]
    inputs: Vec<PathBuf>,
    /// Field mapping (TOML) for the `--input` at the same position.
    #[arg(long = "spec", required = true)]
    specs: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct CleanArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Evaluation corpus whose near-duplicates are removed; repeatable.
    #[arg(long = "eval")]
    eval: Vec<PathBuf>,
    /// Cleaning config (TOML); flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    threshold: Option<f64>,
    /// Shingle size in tokens (1 = unigrams).
    #[arg(long)]
    shingle: Option<usize>,
    #[arg(long)]
    min_turns: Option<usize>,
    #[arg(long)]
    min_tokens: Option<usize>,
    /// Prefilter candidates with MinHash banding.
    #[arg(long)]
    minhash: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct RolesArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// One name per line; defaults to the bundled first-name list.
    #[arg(long)]
    pool: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Rename even dialogues whose roles already come from the pool.
    #[arg(long)]
    force: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct AugmentArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// TOML file with a `[map]` table of old = new names.
    #[arg(long, conflicts_with = "pool")]
    map: Option<PathBuf>,
    /// Draw fresh names per example from this pool instead of a fixed map.
    #[arg(long)]
    pool: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Also write the unmodified examples, ahead of the copies.
    #[arg(long)]
    keep_original: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct AnnotateArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Answer every request with this text instead of calling an endpoint.
    #[arg(
        long,
        conflicts_with = "endpoint",
        required_unless_present = "endpoint"
    )]
    mock: Option<String>,
    /// Chat-completion URL; the bearer token is read from LLM_API_KEY.
    #[arg(long)]
    endpoint: Option<String>,
    /// Job config (TOML); flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    model: Option<String>,
    /// preceding, instruct or subsequent.
    #[arg(long)]
    template: Option<String>,
    #[arg(long)]
    temperature: Option<f64>,
    #[arg(long)]
    max_in_flight: Option<usize>,
    /// Maximum requests this run, retries included.
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    max_attempts: Option<u32>,
    /// Per-request timeout in seconds.
    #[arg(long, default_value_t = 60)]
    timeout: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct NoiseArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Noising config (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Task weights (TOML). Defaults to equal weights on the five
    /// reconstruction tasks.
    #[arg(long)]
    mix: Option<PathBuf>,
    /// Overrides the seeds of both config files.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of pairs; defaults to the corpus size.
    #[arg(long)]
    count: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct StatsArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// rendered or utterances.
    #[arg(long, default_value = "rendered")]
    view: String,
    /// instance or type.
    #[arg(long, default_value = "instance")]
    basis: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// JSONL with `id` and `text`.
    #[arg(long, required_unless_present = "select_train_ref")]
    candidates: Option<PathBuf>,
    /// JSONL with `id` and a `references` list.
    #[arg(long)]
    references: PathBuf,
    /// Truncate candidates to this many tokens before scoring.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    max_length: Option<u64>,
    /// Average over every reference of an example.
    #[arg(long)]
    multi_ref: bool,
    /// Pick the reference closest to each dialogue instead of scoring.
    #[arg(long, requires = "dialogues")]
    select_train_ref: bool,
    /// Corpus holding the dialogues for `--select-train-ref`.
    #[arg(long)]
    dialogues: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 1,
        }
    }
}

pub(crate) fn data<E: Display>(e: E) -> CliError {
    CliError::Data(e.to_string())
}

pub(crate) fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code. Messages go to stdout and stderr.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if let CliError::Usage(_) = e {
                eprintln!("run `dialsum --help` for usage");
            }
            e.exit_code()
        }
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build()
        .map_err(data)?;
    pool.install(|| match cli.command {
        Command::Ingest(a) => cmd::ingest::run(a),
        Command::Clean(a) => cmd::clean::run(a),
        Command::Roles(a) => cmd::roles::run(a),
        Command::Augment(a) => cmd::augment::run(a),
        Command::Annotate(a) => cmd::annotate::run(a),
        Command::Noise(a) => cmd::noise::run(a),
        Command::Stats(a) => cmd::stats::run(a),
        Command::Eval(a) => cmd::eval::run(a),
    })
}
