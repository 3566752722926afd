use std::path::PathBuf;

use bpexplain_core::eval::EvalMethod;
use bpexplain_core::io::SyntheticKind;
use bpexplain_core::{GelVariant, Method};
use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "bpexplain",
    version,
    about = "Belief propagation and explaining subgraphs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run BP on the whole model and write every node's belief.
    Infer(InferArgs),
    /// Explain one target's belief with small subgraphs.
    Explain(ExplainArgs),
    /// Explain many targets in parallel and write a run report.
    Batch(BatchArgs),
    /// Compare search methods over targets and seeds.
    Eval(EvalArgs),
    /// Start the HTTP service.
    Serve(ServeArgs),
}

/// Where the model comes from. Exactly one of `--edges`, `--preset` or
/// `--synthetic` is required.
#[derive(Debug, Args)]
pub struct GraphArgs {
    /// Edge list, one "u<TAB>v" pair per line.
    #[arg(long, value_name = "PATH", group = "source")]
    pub edges: Option<PathBuf>,
    /// Built-in model: karate or counterexample.
    #[arg(long, value_name = "NAME", group = "source")]
    pub preset: Option<String>,
    /// Generated graph: tree, chain, erdos-renyi:P or review:R.
    #[arg(long, value_name = "KIND", group = "source", requires = "nodes")]
    pub synthetic: Option<SyntheticKind>,
    /// Node count for --synthetic.
    #[arg(long, value_name = "N")]
    pub nodes: Option<usize>,
    /// Labels, one "node<TAB>class" pair per line, classes from 1.
    #[arg(long, value_name = "PATH")]
    pub labels: Option<PathBuf>,
    /// Explicit priors, one "node<TAB>p1<TAB>...<TAB>pc" line per node.
    #[arg(long, value_name = "PATH")]
    pub priors: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    pub classes: usize,
    /// Diagonal of the edge potential.
    #[arg(long, default_value_t = 0.9)]
    pub homophily: f64,
    /// Fraction of labels kept (for --synthetic, fraction of nodes labeled).
    #[arg(long, default_value_t = 1.0)]
    pub labeled_ratio: f64,
}

#[derive(Debug, Args)]
pub struct BpArgs {
    #[arg(long, default_value_t = 100)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub tolerance: f64,
    #[arg(long, default_value_t = 0.0)]
    pub damping: f64,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    #[arg(long, default_value = "GE-G")]
    pub method: Method,
    /// Maximum subgraph size C.
    #[arg(long, short = 'C', default_value_t = 5)]
    pub capacity: usize,
    /// Beam width k.
    #[arg(long, short = 'k', default_value_t = 1)]
    pub beam: usize,
    /// Fraction of first-seen frontier nodes dropped (GE-G only).
    #[arg(long, default_value_t = 0.0)]
    pub prune: f64,
    /// Which end-points GE-L and Random-L may extend.
    #[arg(long, default_value = "unconstrained")]
    pub gel_variant: GelVariant,
}

#[derive(Debug, Args)]
pub struct TargetArgs {
    /// Targets, one node id per line.
    #[arg(long, value_name = "PATH", conflicts_with = "target_ratio")]
    pub targets: Option<PathBuf>,
    /// Fraction of candidate nodes sampled as targets.
    #[arg(long, default_value_t = 1.0)]
    pub target_ratio: f64,
    /// Sample only nodes whose prior is uniform.
    #[arg(long)]
    pub unlabeled: bool,
}

#[derive(Debug, Args)]
pub struct InferArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub bp: BpArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output file; standard output if absent.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub bp: BpArgs,
    #[command(flatten)]
    pub search: SearchArgs,
    #[arg(long)]
    pub target: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write the union of the beam.
    #[arg(long)]
    pub comb: bool,
    /// Directory for one document per candidate; without it the documents
    /// go to standard output as one JSON array.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BatchArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub bp: BpArgs,
    #[command(flatten)]
    pub search: SearchArgs,
    #[command(flatten)]
    pub targets: TargetArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    /// Also evaluate each target's beam union.
    #[arg(long)]
    pub comb: bool,
    /// Keep wall-clock times in the report (makes it non-reproducible).
    #[arg(long)]
    pub timings: bool,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub bp: BpArgs,
    #[command(flatten)]
    pub targets: TargetArgs,
    /// Comma-separated methods; all six if absent.
    #[arg(long, value_delimiter = ',')]
    pub methods: Vec<EvalMethod>,
    #[arg(long, short = 'C', default_value_t = 5)]
    pub capacity: usize,
    /// Seeds 0..N for the random baselines.
    #[arg(long, default_value_t = 10)]
    pub seeds: u64,
    #[arg(long, default_value = "unconstrained")]
    pub gel_variant: GelVariant,
    /// Seed for data and target sampling.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    /// JSON report path; the table is always printed.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    /// Minutes before an unused session is dropped.
    #[arg(long, default_value_t = 30)]
    pub idle_minutes: u64,
}
