use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod config;

/// Bad invocation: reported with exit status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Parser, Debug)]
#[command(name = "roundtrip", version, about = "Synthetic OCR error data: generate, score, model and correct")]
pub struct Cli {
    /// Flat `key = value` file supplying defaults for any flag below
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Worker threads (default: one per core)
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Render a corpus under every font, OCR the images and write a pair dataset
    Generate(GenerateArgs),
    /// Corrupt a corpus with seeded character noise, without rendering
    Simulate(SimulateArgs),
    /// Split a dataset into sentence-disjoint train/valid/test files
    Split(SplitArgs),
    /// Score a dataset's OCR side, or predictions for it, with CER and WER
    Evaluate(EvaluateArgs),
    /// Per-font CER and the font closest to the average
    AnalyzeFonts(AnalyzeArgs),
    /// Learn a character confusion channel from a dataset
    TrainChannel(TrainChannelArgs),
    /// Train a character n-gram language model on a corpus
    TrainLm(TrainLmArgs),
    /// Correct a dataset's OCR side with the noisy-channel decoder
    Correct(CorrectArgs),
    /// Write a dataset as `ocr<TAB>gold` lines
    ExportTsv(ExportArgs),
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum EngineKind {
    External,
    Simulate,
}

impl std::str::FromStr for EngineKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        <EngineKind as ValueEnum>::from_str(s, false)
    }
}

#[derive(Args, Debug, Clone, Default)]
pub struct NoiseArgs {
    /// Substitution probability per character
    #[arg(long)]
    pub p_sub: Option<f64>,
    /// Deletion probability per character
    #[arg(long)]
    pub p_del: Option<f64>,
    /// Insertion probability per slot
    #[arg(long)]
    pub p_ins: Option<f64>,
    /// Sample noise from a trained channel instead of the uniform rates
    #[arg(long, value_name = "FILE")]
    pub channel: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    /// Newline-delimited UTF-8 sentences
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Language tag: hi, mr, brx, ne, gom or sa
    #[arg(long)]
    pub lang: Option<String>,
    /// Directory of .ttf/.otf fonts; each file is one font
    #[arg(long)]
    pub fonts_dir: Option<PathBuf>,
    /// OCR engine
    #[arg(long, value_enum)]
    pub engine: Option<EngineKind>,
    /// OCR executable for the external engine (env ROUNDTRIP_OCR_BIN)
    #[arg(long)]
    pub ocr_bin: Option<PathBuf>,
    /// Per-image timeout for the external engine
    #[arg(long)]
    pub timeout_secs: Option<u64>,
    /// Extra attempts for a failed cell
    #[arg(long)]
    pub retries: Option<u32>,
    /// Font size in pixels per em
    #[arg(long)]
    pub font_size: Option<u32>,
    /// Keep rendered images here
    #[arg(long)]
    pub images_dir: Option<PathBuf>,
    /// Master seed
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub noise: NoiseArgs,
    /// Output dataset (JSONL)
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Newline-delimited UTF-8 sentences
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Language tag: hi, mr, brx, ne, gom or sa
    #[arg(long)]
    pub lang: Option<String>,
    /// Master seed
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub noise: NoiseArgs,
    /// Font label to record on the pairs; repeat for several
    #[arg(long = "font-id", default_value = "simulated")]
    pub font_ids: Vec<String>,
    /// Output dataset (JSONL)
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct SplitArgs {
    /// Input dataset
    #[arg(long)]
    pub dataset: PathBuf,
    /// Pairs in the validation split
    #[arg(long)]
    pub valid_size: Option<usize>,
    /// Pairs in the test split
    #[arg(long)]
    pub test_size: Option<usize>,
    /// Master seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Directory for train.jsonl, valid.jsonl and test.jsonl
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    /// Dataset to score
    #[arg(long)]
    pub dataset: PathBuf,
    /// `{id, prediction}` records to score instead of the OCR side
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    /// Count grapheme clusters instead of codepoints
    #[arg(long)]
    pub grapheme: bool,
    /// Write the full report as JSON
    #[arg(long)]
    pub report_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    /// Dataset to analyze
    #[arg(long)]
    pub dataset: PathBuf,
    /// Write the report as JSON
    #[arg(long)]
    pub report_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct TrainChannelArgs {
    /// Dataset of aligned pairs
    #[arg(long)]
    pub dataset: PathBuf,
    /// Add-k smoothing
    #[arg(long)]
    pub k: Option<f64>,
    /// Where to write the channel
    #[arg(long)]
    pub model_out: PathBuf,
}

#[derive(Args, Debug)]
pub struct TrainLmArgs {
    /// Newline-delimited UTF-8 sentences
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Language tag: hi, mr, brx, ne, gom or sa
    #[arg(long)]
    pub lang: Option<String>,
    /// N-gram order
    #[arg(long)]
    pub order: Option<usize>,
    /// Add-k smoothing
    #[arg(long)]
    pub k: Option<f64>,
    /// Where to write the model
    #[arg(long)]
    pub model_out: PathBuf,
}

#[derive(Args, Debug)]
pub struct CorrectArgs {
    /// Dataset whose OCR side is corrected
    #[arg(long)]
    pub dataset: PathBuf,
    /// Trained channel
    #[arg(long)]
    pub channel: PathBuf,
    /// Trained language model
    #[arg(long)]
    pub lm: PathBuf,
    /// Beam width
    #[arg(long)]
    pub beam: Option<usize>,
    /// Language model weight
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Edits allowed per whitespace-delimited token
    #[arg(long)]
    pub max_edits: Option<usize>,
    /// Candidate characters kept per hypothesis and step
    #[arg(long)]
    pub top_k: Option<usize>,
    /// Count grapheme clusters instead of codepoints in the report
    #[arg(long)]
    pub grapheme: bool,
    /// Where to write `{id, prediction}` records
    #[arg(long)]
    pub predictions: PathBuf,
    /// Write before/after reports as JSON
    #[arg(long)]
    pub report_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ExportArgs {
    /// Dataset to export
    #[arg(long)]
    pub dataset: PathBuf,
    /// Output TSV
    #[arg(long)]
    pub out: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap prints help/version to stdout and errors to stderr
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let usage = e.downcast_ref::<UsageError>().is_some();
            eprintln!("error: {e:#}");
            ExitCode::from(if usage { 2 } else { 1 })
        }
    }
}
