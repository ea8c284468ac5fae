use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "hotskit", version, about = "HOTS link analysis and matrix scaling on sparse graphs")]
pub struct Cli {
    /// Worker threads for the solver kernels (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve a ranking model and write the scores.
    Rank(RankArgs),
    /// Solve a model and report the spectral convergence rate at the solution.
    Rate(RateArgs),
    /// Recover the balanced flow from a scores file.
    Flow(FlowArgs),
    /// Generate a synthetic graph as an edge list.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Edgelist,
    Mm,
}

#[derive(Debug, Args)]
pub struct GraphArgs {
    /// Graph file.
    #[arg(long)]
    pub input: PathBuf,

    #[arg(long, value_enum, default_value_t = Format::Edgelist)]
    pub format: Format,

    /// Read the third edge-list column as the arc weight.
    #[arg(long)]
    pub weighted: bool,

    /// Uniform positive term added to every entry, e.g. 1/n.
    #[arg(long, default_value_t = 0.0)]
    pub shift: f64,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Throughput of the effective and normalized models.
    #[arg(long, default_value_t = 0.9)]
    pub alpha: f64,

    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,

    #[arg(long)]
    pub max_iter: Option<usize>,

    /// Start from random potentials drawn with this seed instead of zero.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Add this to the diagonal before an ideal solve; it restores
    /// primitivity without changing the balancing.
    #[arg(long)]
    pub add_diagonal: Option<f64>,

    /// Per-iteration trace as CSV.
    #[arg(long)]
    pub trace: Option<PathBuf>,

    /// Per-iteration trace as JSON lines.
    #[arg(long)]
    pub trace_jsonl: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RankAlgo {
    Ideal,
    Dss,
    Deformed,
    Effective,
    EffectiveCd,
    Bounded,
    Normalized,
    Pagerank,
}

#[derive(Debug, Args)]
pub struct RankArgs {
    #[arg(long, value_enum)]
    pub algo: RankAlgo,

    #[command(flatten)]
    pub graph: GraphArgs,

    #[command(flatten)]
    pub solve: SolveArgs,

    /// Exponent of the deformed iteration: 1 is the Perron vector of Aᵀ,
    /// ½ the ideal HOTS ranking.
    #[arg(long, default_value_t = 0.5)]
    pub deform_alpha: f64,

    /// PageRank damping factor.
    #[arg(long, default_value_t = 0.85)]
    pub damping: f64,

    /// Flow bounds file with lines `src dst lower upper` for `--algo bounded`.
    #[arg(long)]
    pub bounds: Option<PathBuf>,

    /// Rankings as TSV with header `node\tscore\trank`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RateAlgo {
    Ideal,
    Effective,
    Normalized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RateMethod {
    /// Dense eigenvalues of the ideal Jacobian.
    Dense,
    /// Block power iteration on the ideal Jacobian.
    Power,
    /// Dense eigenvalues of a finite-difference Jacobian.
    FdDense,
    /// Block power iteration with finite-difference products.
    FdPower,
}

#[derive(Debug, Args)]
pub struct RateArgs {
    #[arg(long, value_enum)]
    pub algo: RateAlgo,

    #[command(flatten)]
    pub graph: GraphArgs,

    #[command(flatten)]
    pub solve: SolveArgs,

    /// Defaults to the dense method up to 2000 nodes and the power method above.
    #[arg(long, value_enum)]
    pub method: Option<RateMethod>,
}

#[derive(Debug, Args)]
pub struct FlowArgs {
    #[command(flatten)]
    pub graph: GraphArgs,

    /// Rankings TSV as written by `rank`.
    #[arg(long)]
    pub scores: PathBuf,

    /// Flow as TSV with header `src\tdst\tflow`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Model {
    CyclePlusChords,
    Preferential,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum)]
    pub model: Model,

    #[arg(long)]
    pub n: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Extra arcs of the cycle-plus-chords model (default: n).
    #[arg(long)]
    pub chords: Option<usize>,

    /// Edge list output.
    #[arg(long)]
    pub out: PathBuf,
}
