use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "geomech",
    version,
    about = "Impartial selection of an influential agent in a follower DAG"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Selection distribution, influential set and ratio for one graph.
    Select(SelectArgs),
    /// Check incentive compatibility, fairness, structure or the root property.
    Verify(VerifyArgs),
    /// Expected ratio of a mechanism over one graph or an ensemble.
    Eval(EvalArgs),
    /// Convergence table of the equalized upper-bound ratio.
    Bound(BoundArgs),
    /// Write a generated graph in edge-list or DOT format.
    Generate(GenerateArgs),
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// json, csv or text.
    #[arg(long, default_value = "json")]
    pub format: String,
    /// Write to a file instead of standard output.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

/// Where graphs come from: an edge-list file or a seeded generator.
#[derive(Debug, Args)]
pub struct SourceArgs {
    /// Edge-list file, or `-` for standard input.
    #[arg(short, long, conflicts_with = "family")]
    pub input: Option<PathBuf>,
    /// gnp-dag, random-forest, chain, upper-bound, worst-case or tightness.
    #[arg(long)]
    pub family: Option<String>,
    /// Node count `N`, or an inclusive range `A-B` to draw from.
    #[arg(long)]
    pub n: Option<String>,
    /// Edge probability (gnp-dag) or attach probability (random-forest).
    #[arg(long, default_value_t = 0.3)]
    pub p: f64,
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    #[arg(long)]
    pub j: Option<usize>,
    /// Cap on sampled out-degree for gnp-dag.
    #[arg(long)]
    pub max_out_degree: Option<usize>,
    /// Randomly relabel generated graphs.
    #[arg(long)]
    pub shuffle: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long)]
    pub mechanism: Option<String>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// ic, fairness, observations or root.
    #[arg(long, default_value = "ic")]
    pub mode: String,
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long)]
    pub mechanism: Option<String>,
    /// Graphs to check; for fairness, the number of accepted samples.
    #[arg(long)]
    pub trials: Option<u64>,
    /// Fairness only: give up after this many drawn graphs.
    #[arg(long)]
    pub max_attempts: Option<u64>,
    /// Misreports per agent before switching from enumeration to sampling.
    #[arg(long, default_value_t = 1 << 20)]
    pub subset_cap: u64,
    /// Re-run counterexamples from an earlier `verify --mode ic` report.
    #[arg(long, conflicts_with_all = ["input", "family"])]
    pub replay: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long)]
    pub mechanism: Option<String>,
    #[arg(long)]
    pub trials: Option<u64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    /// Comma-separated values of k (each at least 2).
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "2,3,5,10,100,1000,10000,100000,1000000"
    )]
    pub k: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "csv")]
    pub format: String,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// edge-list or dot.
    #[arg(long, default_value = "edge-list")]
    pub graph_format: String,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}
