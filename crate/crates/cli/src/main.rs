//! `onboard`: ingest issue-tracker exports, label newcomer issues,
//! benchmark classifiers, train a model and tag unresolved issues.
//!
//! Exit codes: 0 success, 1 usage, 2 input schema, 3 pipeline or training
//! failure, 4 model / vocabulary mismatch.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use onboard_core::pipeline::Metric;

use commands::Failure;

#[derive(Parser, Debug)]
#[command(name = "onboard", version, about = "Newcomer issue labeling, benchmarking and tagging")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Validate a JSON Lines export and print dataset statistics.
    Ingest(IngestArgs),
    /// Write per-issue role labels.
    Label(LabelArgs),
    /// Write per-contributor issue resolution frequencies.
    Irf(IrfArgs),
    /// Run the split / balance / grid-search benchmark.
    Benchmark(BenchmarkArgs),
    /// Fit one hyperparameter assignment and save the model.
    Train(TrainArgs),
    /// Rank unresolved issues with a trained model.
    Tag(TagArgs),
    /// Generate a planted-signal synthetic corpus.
    Synth(SynthArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum QuestionArg {
    Rq1,
    Rq2,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum MetricArg {
    Precision,
    Recall,
    F1,
}

impl From<MetricArg> for Metric {
    fn from(m: MetricArg) -> Metric {
        match m {
            MetricArg::Precision => Metric::Precision,
            MetricArg::Recall => Metric::Recall,
            MetricArg::F1 => Metric::F1,
        }
    }
}

#[derive(Args, Debug)]
struct IngestArgs {
    #[arg(long)]
    input: PathBuf,
    /// Also write `stats.json` here.
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct LabelArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output_dir: PathBuf,
    #[arg(long, value_enum)]
    question: QuestionArg,
    #[arg(long, value_delimiter = ',', default_value = "1,5,10")]
    thresholds: Vec<u32>,
}

#[derive(Args, Debug)]
struct IrfArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output_dir: PathBuf,
}

#[derive(Args, Debug)]
struct BenchmarkArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output_dir: PathBuf,
    #[arg(long, value_enum)]
    question: QuestionArg,
    #[arg(long, value_delimiter = ',', default_value = "1,5,10")]
    thresholds: Vec<u32>,
    /// JSON grid file; kinds or keys left out keep their defaults.
    #[arg(long)]
    grid: Option<PathBuf>,
    #[arg(long)]
    seed: u64,
    /// `all` or a comma-separated subset of rf, dt, gnb, svm.
    #[arg(long, value_delimiter = ',', default_value = "all")]
    classifier: Vec<String>,
    #[arg(long, value_enum, default_value = "precision")]
    metric: MetricArg,
    #[arg(long, default_value_t = 5)]
    runs: usize,
    #[arg(long, default_value_t = 10)]
    folds: usize,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output_dir: PathBuf,
    #[arg(long, value_enum)]
    question: QuestionArg,
    /// Newcomer threshold (one value, RQ1 only).
    #[arg(long, value_delimiter = ',', default_value = "1")]
    thresholds: Vec<u32>,
    /// One of rf, dt, gnb, svm.
    #[arg(long)]
    classifier: String,
    /// Hyperparameter as `key=value`; repeat for every key of the cell.
    #[arg(long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,
    #[arg(long)]
    seed: u64,
}

#[derive(Args, Debug)]
struct TagArgs {
    #[arg(long)]
    model: PathBuf,
    /// Defaults to `vocabulary.json` next to the model.
    #[arg(long)]
    vocabulary: Option<PathBuf>,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output_dir: PathBuf,
}

#[derive(Args, Debug)]
struct SynthArgs {
    /// JSON Lines file to write.
    #[arg(long)]
    output: PathBuf,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 200)]
    contributors: usize,
    #[arg(long, default_value_t = 10)]
    issues_per_contributor: usize,
    #[arg(long, default_value_t = 0)]
    unresolved: usize,
    /// Generate an Eclipse-sized corpus (~159k issues) instead.
    #[arg(long)]
    eclipse_scale: bool,
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(value) = std::env::var("ONBOARD_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::usage(format!("ONBOARD_THREADS must be a positive integer, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::usage(e.to_string()))
}

fn run(cli: Cli) -> Result<(), Failure> {
    configure_threads()?;
    match cli.command {
        Command::Ingest(a) => commands::ingest(&a.input, a.output_dir.as_deref()),
        Command::Label(a) => commands::label(&a.input, &a.output_dir, a.question, &a.thresholds),
        Command::Irf(a) => commands::irf(&a.input, &a.output_dir),
        Command::Benchmark(a) => commands::benchmark(&a),
        Command::Train(a) => commands::train(&a),
        Command::Tag(a) => commands::tag(&a),
        Command::Synth(a) => commands::synth(&a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.error);
            ExitCode::from(f.code)
        }
    }
}
