//! File-based pipeline driver. Every stage is a pure function of its input
//! files and flags, so reruns with the same inputs produce byte-identical
//! outputs. Exit codes: 0 success, 2 input/validation error, 3 internal
//! invariant violation.

mod commands;
mod config;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{ScorerKind, WidthSpec};

#[derive(Debug)]
pub struct CliError {
    message: String,
    code: u8,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        CliError {
            message: message.into(),
            code: 2,
        }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        CliError {
            message: message.into(),
            code: 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.message.fmt(f)
    }
}

impl From<kgqa::lpg::GraphError> for CliError {
    fn from(e: kgqa::lpg::GraphError) -> Self {
        CliError::input(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::input(e.to_string())
    }
}

#[derive(Parser)]
#[command(
    name = "kgqa",
    version,
    about = "Grounded query synthesis, constrained decoding, and retrieval over labeled property graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load and validate a graph, printing counts and the extracted schema.
    Ingest(IngestArgs),
    /// Enumerate, score, and select the best query per question; write
    /// training pairs and a coverage report.
    Synthesize(SynthesizeArgs),
    /// Constrained-decode queries for each question's candidate set.
    Decode(DecodeArgs),
    /// Retrieve subgraphs from decoded queries, rank answers, and compute
    /// Hit@1/Hit@5/Recall@20/MRR.
    Evaluate(EvaluateArgs),
}

#[derive(Args)]
struct GraphArgs {
    /// Node JSONL file.
    #[arg(long)]
    nodes: Option<PathBuf>,
    /// Edge JSONL file.
    #[arg(long)]
    edges: Option<PathBuf>,
    /// Binary embedding matrix (u64 rows, u64 dim, then little-endian f32s).
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// JSON config supplying defaults for any flag.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct IngestArgs {
    #[command(flatten)]
    graph: GraphArgs,
}

#[derive(Args)]
struct SynthesizeArgs {
    #[command(flatten)]
    graph: GraphArgs,
    /// QA JSONL file: {"id", "question", "entities"?, "answer_ids"}.
    #[arg(long)]
    qa: Option<PathBuf>,
    /// Minimum best-candidate recall for a pair to be emitted.
    #[arg(long)]
    min_recall: Option<f64>,
    /// Comma-separated template subset (one-hop,two-hop,connecting).
    #[arg(long, value_delimiter = ',')]
    templates: Option<Vec<String>>,
    /// Nearest neighbors to take when a mention has no exact name match.
    #[arg(long)]
    resolve_k: Option<usize>,
    /// Seed for the reference text embedder used in fallback resolution.
    #[arg(long)]
    embed_seed: Option<u64>,
    /// Training-pair JSONL output (default: pairs.jsonl).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Coverage report JSON output.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct DecodeArgs {
    #[command(flatten)]
    graph: GraphArgs,
    /// QA JSONL file (entities per question; answers for the oracle scorer).
    #[arg(long)]
    qa: Option<PathBuf>,
    /// Pre-built candidate sets, JSONL {"id", "queries"}; skips enumeration.
    #[arg(long)]
    candidates: Option<PathBuf>,
    /// Beam width: a positive integer, or M for the full candidate count.
    #[arg(long)]
    width: Option<WidthSpec>,
    /// Scorer standing in for the language model.
    #[arg(long, value_enum)]
    scorer: Option<ScorerKind>,
    /// Seed for the hash scorer.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    templates: Option<Vec<String>>,
    #[arg(long)]
    resolve_k: Option<usize>,
    #[arg(long)]
    embed_seed: Option<u64>,
    /// Decoded-query JSONL output (default: decoded.jsonl).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    graph: GraphArgs,
    /// QA JSONL file providing the gold answer sets.
    #[arg(long)]
    qa: Option<PathBuf>,
    /// Decoded-query JSONL from the decode stage.
    #[arg(long)]
    decoded: Option<PathBuf>,
    /// Pre-computed predictions JSONL {"id", "ranked"}; skips retrieval.
    #[arg(long)]
    predictions: Option<PathBuf>,
    /// Node budget for subgraph retrieval.
    #[arg(long)]
    budget: Option<usize>,
    /// Metrics JSON output (default: metrics.json).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the ranked predictions.
    #[arg(long)]
    predictions_out: Option<PathBuf>,
    /// Also write the textualized retrieval prompts, JSONL {"id", "prompt"}.
    #[arg(long)]
    prompts_out: Option<PathBuf>,
    /// Property keys to include in prompt details (default: all).
    #[arg(long, value_delimiter = ',')]
    detail_keys: Option<Vec<String>>,
    /// Character cap for each prompt.
    #[arg(long)]
    max_chars: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Ingest(args) => commands::ingest(args),
        Command::Synthesize(args) => commands::synthesize(args),
        Command::Decode(args) => commands::decode(args),
        Command::Evaluate(args) => commands::evaluate(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
