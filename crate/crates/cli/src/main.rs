use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;

#[derive(Parser, Debug)]
#[command(name = "gls", version, about = "Laplacian spectrum graph embeddings, sweeps and classification")]
struct Cli {
    /// Cap on worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write the truncated spectrum of every graph in a dataset.
    Embed(EmbedArgs),
    /// Distance series under random edge additions, removals and node additions.
    PerturbSweep(PerturbSweepArgs),
    /// Check the spectral-distance bounds on random perturbation instances.
    Bounds(BoundsArgs),
    /// Nested cross-validated SVM accuracy on a dataset.
    Classify(ClassifyArgs),
    /// Accuracy as a function of the embedding dimension, plus the
    /// per-dimension distance series of a grown graph.
    TruncationSweep(TruncationArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum GridPreset {
    Molecular,
    Social,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum SweepKind {
    EdgeAdd,
    EdgeRemove,
    NodeAdd,
}

#[derive(Args, Debug)]
pub struct DatasetArgs {
    /// Directory holding one sub-directory per dataset in TU layout.
    #[arg(long, default_value = "data")]
    dataset_dir: PathBuf,
    /// Dataset name, e.g. MUTAG.
    #[arg(long)]
    name: String,
}

#[derive(Args, Debug)]
#[group(multiple = false)]
pub struct DimArgs {
    /// Explicit embedding dimension.
    #[arg(long)]
    dim: Option<usize>,
    /// Dimension as this percentile of graph sizes (default 95).
    #[arg(long)]
    percentile: Option<f64>,
}

#[derive(Args, Debug)]
pub struct OutputArgs {
    /// Output file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args, Debug)]
pub struct EmbedArgs {
    #[command(flatten)]
    dataset: DatasetArgs,
    #[command(flatten)]
    dim: DimArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct PerturbSweepArgs {
    /// Dataset to take the base graph from; a random graph is used otherwise.
    #[arg(long, requires = "name")]
    dataset_dir: Option<PathBuf>,
    #[arg(long, requires = "graph_id")]
    name: Option<String>,
    /// 1-based graph id within the dataset.
    #[arg(long, requires = "name")]
    graph_id: Option<usize>,
    /// Nodes of the random base graph.
    #[arg(long, default_value_t = 80)]
    nodes: usize,
    /// Edge probability of the random base graph.
    #[arg(long, default_value_t = 0.05)]
    edge_prob: f64,
    /// Seed of the random base graph.
    #[arg(long, default_value_t = 0)]
    graph_seed: u64,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [SweepKind::EdgeAdd, SweepKind::EdgeRemove, SweepKind::NodeAdd])]
    kinds: Vec<SweepKind>,
    #[arg(long, default_value_t = 100)]
    k_max: usize,
    #[arg(long, default_value_t = 10)]
    k_step: usize,
    /// Nodes added in the node-addition sweep.
    #[arg(long, default_value_t = 20)]
    steps: usize,
    #[arg(long, value_delimiter = ',', default_values_t = [0, 1, 2, 3])]
    connectivities: Vec<usize>,
    #[arg(long, default_value_t = 30)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct BoundsArgs {
    #[arg(long, default_value_t = 1000)]
    instances: usize,
    /// Largest node count after perturbation.
    #[arg(long, default_value_t = 30)]
    max_nodes: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also compute the exact divergence by permutation search (at most 9 nodes).
    #[arg(long)]
    brute_force: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct GridArgs {
    #[arg(long, value_enum, default_value_t = GridPreset::Molecular)]
    grid: GridPreset,
    /// Overrides the preset C values.
    #[arg(long, value_delimiter = ',')]
    c_grid: Option<Vec<f64>>,
    /// Overrides the preset gamma values.
    #[arg(long, value_delimiter = ',')]
    gamma_grid: Option<Vec<f64>>,
    #[arg(long, default_value_t = 10)]
    folds: usize,
    #[arg(long, default_value_t = 5)]
    inner_folds: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
pub struct ClassifyArgs {
    #[command(flatten)]
    dataset: DatasetArgs,
    #[command(flatten)]
    dim: DimArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct TruncationArgs {
    #[command(flatten)]
    dataset: DatasetArgs,
    /// Dimensions to evaluate (default: 1, 2, 5, 10, the 95th percentile
    /// size and the largest size).
    #[arg(long, value_delimiter = ',')]
    dims: Option<Vec<usize>>,
    #[command(flatten)]
    grid: GridArgs,
    /// 1-based id of the graph grown for the per-dimension series
    /// (default: the first largest graph).
    #[arg(long)]
    graph_id: Option<usize>,
    #[arg(long, default_value_t = 20)]
    steps: usize,
    #[arg(long, value_delimiter = ',', default_values_t = [0, 1, 2, 3])]
    connectivities: Vec<usize>,
    #[arg(long, default_value_t = 15)]
    max_dim: usize,
    #[arg(long, default_value_t = 30)]
    trials: usize,
    #[command(flatten)]
    output: OutputArgs,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments");
            eprintln!("error[UsageError]: {}", first.trim_start_matches("error: "));
            return ExitCode::from(2);
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error[UsageError]: cannot configure {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match &cli.command {
        Command::Embed(a) => commands::embed(a),
        Command::PerturbSweep(a) => commands::perturb_sweep(a),
        Command::Bounds(a) => commands::bounds(a),
        Command::Classify(a) => commands::classify(a),
        Command::TruncationSweep(a) => commands::truncation_sweep(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error[{}]: {msg}", e.class());
            ExitCode::FAILURE
        }
    }
}
