mod bench;
mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use twtm::parallel::Solution;
use twtm::{TagMode, TrainConfig};

#[derive(Parser)]
#[command(
    name = "twtm",
    version,
    about = "Tag-weighted topic models for tagged document collections"
)]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a model and write it with its ELBO trace and per-document tag weights.
    Train(TrainCmd),
    /// Held-out perplexity of a test corpus under a trained model.
    Eval(EvalCmd),
    /// Rank the model's tags for each test document.
    Predict(PredictCmd),
    /// Split a corpus into groups of documents that share no tags.
    Cluster(ClusterCmd),
    /// Add random tags to every document and record which ones were added.
    InjectNoise(InjectNoiseCmd),
    /// Write each document's inferred topic mixture as CSV.
    ExportFeatures(ExportFeaturesCmd),
    /// Per-iteration timings across corpus sizes, worker counts and solutions.
    Bench(BenchCmd),
    /// Sample a synthetic corpus from the tag-weighted generative process.
    Generate(GenerateCmd),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelKind {
    Twtm,
    Twda,
}

impl From<ModelKind> for TagMode {
    fn from(k: ModelKind) -> Self {
        match k {
            ModelKind::Twtm => TagMode::Twtm,
            ModelKind::Twda => TagMode::Twda,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SolutionArg {
    Seq,
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
    #[value(name = "3")]
    Three,
}

impl SolutionArg {
    fn parallel(self) -> Option<Solution> {
        match self {
            SolutionArg::Seq => None,
            SolutionArg::One => Some(Solution::Solution1),
            SolutionArg::Two => Some(Solution::Solution2),
            SolutionArg::Three => Some(Solution::Solution3),
        }
    }
}

#[derive(Args, Clone)]
struct ModelArgs {
    #[arg(long = "model", value_enum, default_value = "twda")]
    kind: ModelKind,
    /// Number of topics K.
    #[arg(long, default_value_t = 10)]
    topics: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Relative ELBO change that stops EM.
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
    #[arg(long, default_value_t = 100)]
    max_iters: usize,
    #[arg(long, default_value_t = 1.0)]
    pi_init: f64,
}

impl ModelArgs {
    fn train_config(&self) -> TrainConfig {
        TrainConfig {
            num_topics: self.topics,
            seed: self.seed,
            tol: self.tol,
            max_iters: self.max_iters,
            pi_init: self.pi_init,
            ..TrainConfig::default()
        }
    }
}

#[derive(Args)]
struct TrainCmd {
    /// JSON-lines training corpus.
    #[arg(long)]
    corpus: PathBuf,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, value_enum, default_value = "seq")]
    solution: SolutionArg,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalCmd {
    /// Model file written by `train`.
    #[arg(long = "model-file")]
    model_file: PathBuf,
    /// JSON-lines test corpus.
    #[arg(long)]
    test: PathBuf,
    /// Report path; standard output if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PredictCmd {
    #[arg(long = "model-file")]
    model_file: PathBuf,
    /// Test corpus; tags present in it are used as the truth for recall.
    #[arg(long)]
    test: PathBuf,
    #[arg(long, default_value_t = 3)]
    top_n: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ClusterCmd {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct InjectNoiseCmd {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    noise_percent: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for the noisy corpus and the sidecar.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExportFeaturesCmd {
    #[arg(long = "model-file")]
    model_file: PathBuf,
    #[arg(long)]
    corpus: PathBuf,
    /// CSV path; standard output if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchCmd {
    #[arg(long)]
    corpus: PathBuf,
    #[command(flatten)]
    model: ModelArgs,
    /// Fractions of the corpus to time.
    #[arg(long, value_delimiter = ',', default_value = "0.1,1.0")]
    ratios: Vec<f64>,
    /// Worker counts to time.
    #[arg(long, value_delimiter = ',', default_value = "1,2,4")]
    workers: Vec<usize>,
    /// Iterations per run (overrides --max-iters; EM never stops early).
    #[arg(long, default_value_t = 3)]
    iterations: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GenerateCmd {
    #[arg(long, default_value_t = 100)]
    docs: usize,
    #[arg(long, default_value_t = 200)]
    vocab: usize,
    #[arg(long, default_value_t = 10)]
    tags: usize,
    #[arg(long, default_value_t = 5)]
    topics: usize,
    #[arg(long, default_value_t = 2)]
    tags_per_doc: usize,
    #[arg(long, default_value_t = 50)]
    words_per_doc: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// JSON-lines output path.
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match cli.command {
        Command::Train(c) => commands::train(c),
        Command::Eval(c) => commands::eval(c),
        Command::Predict(c) => commands::predict(c),
        Command::Cluster(c) => commands::cluster(c),
        Command::InjectNoise(c) => commands::inject_noise(c),
        Command::ExportFeatures(c) => commands::export_features(c),
        Command::Bench(c) => bench::run(c),
        Command::Generate(c) => commands::generate(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
