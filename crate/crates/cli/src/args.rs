use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ethgnn::gnn::LayerType;
use ethgnn::txgraph::EdgeWeighting;

#[derive(Debug, Parser)]
#[command(name = "ethgnn", version, about = "Ethereum transaction graphs, GNN training, and RL gas-limit tuning")]
pub struct Cli {
    /// Directory for every artifact of the run.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Download a block range over JSON-RPC (or generate it) into an NDJSON cache.
    Fetch(FetchArgs),
    /// Build the transaction graph from a cache and write it out.
    Graph(GraphArgs),
    /// Train a node classifier on the high-activity proxy task.
    Train(TrainArgs),
    /// Gas-limit tuning with tabular Q-learning or the iterative search.
    GasOpt(GasOptArgs),
    /// Plain GAT against the combined GAT + PPO loop.
    Gatrl(GatrlArgs),
    /// Accuracy and training time per model and block count.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct FetchArgs {
    /// JSON-RPC endpoint.
    #[arg(long, env = "ETH_RPC_URL")]
    pub rpc_url: Option<String>,
    #[arg(long)]
    pub start: u64,
    /// Inclusive.
    #[arg(long)]
    pub end: u64,
    /// Output cache; defaults to `<out>/blocks.ndjson`.
    #[arg(long)]
    pub cache: Option<PathBuf>,
    /// Concurrent requests.
    #[arg(long, default_value_t = 4)]
    pub parallelism: usize,
    /// Generate seeded synthetic blocks instead of contacting an endpoint.
    #[arg(long)]
    pub synthetic: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Where blocks come from for graph-based commands.
#[derive(Debug, Args)]
pub struct SourceArgs {
    /// NDJSON block cache written by `fetch`.
    #[arg(long, conflicts_with = "synthetic_blocks")]
    pub cache: Option<PathBuf>,
    /// Generate this many synthetic blocks instead of reading a cache.
    #[arg(long)]
    pub synthetic_blocks: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Weighting {
    Count,
    Value,
}

impl From<Weighting> for EdgeWeighting {
    fn from(w: Weighting) -> Self {
        match w {
            Weighting::Count => EdgeWeighting::Count,
            Weighting::Value => EdgeWeighting::Value,
        }
    }
}

#[derive(Debug, Args)]
pub struct GraphArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long)]
    pub undirected: bool,
    #[arg(long, value_enum, default_value_t = Weighting::Count)]
    pub weighting: Weighting,
    #[arg(long)]
    pub self_loops: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Model {
    Graphconv,
    Graphsage,
    Gat,
    GatRl,
}

impl From<Model> for LayerType {
    fn from(m: Model) -> Self {
        match m {
            Model::Graphconv => LayerType::GraphConv,
            Model::Graphsage => LayerType::GraphSage,
            Model::Gat => LayerType::Gat,
            Model::GatRl => LayerType::GatRl,
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long, value_enum, default_value_t = Model::Graphconv)]
    pub model: Model,
    #[arg(long, default_value_t = 200)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.01)]
    pub lr: f64,
    #[arg(long, default_value_t = 16)]
    pub hidden: usize,
    #[arg(long, default_value_t = 2)]
    pub layers: usize,
    /// Fraction of nodes in the training mask.
    #[arg(long, default_value_t = 0.7)]
    pub train_frac: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GasMode {
    Rl,
    Search,
}

#[derive(Debug, Args)]
pub struct GasOptArgs {
    #[arg(long, value_enum, default_value_t = GasMode::Rl)]
    pub mode: GasMode,
    /// JSON experiment config; flags below override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub episodes: Option<usize>,
    /// Transactions arriving per block.
    #[arg(long)]
    pub arrivals: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Seconds; search mode only. Defaults to the time of a full block.
    #[arg(long)]
    pub target_time: Option<f64>,
    /// Search mode only.
    #[arg(long, default_value_t = 0.1)]
    pub congestion_threshold: f64,
    /// Search mode starting limit; defaults to one increment.
    #[arg(long)]
    pub start_gas: Option<u64>,
}

#[derive(Debug, Args)]
pub struct GatrlArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// JSON combined-training config; flags below override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub horizon: Option<usize>,
    /// Run the combined loop without the PPO branch.
    #[arg(long)]
    pub no_ppo: bool,
    /// Trailing window for the reported final losses.
    #[arg(long, default_value_t = 10)]
    pub window: usize,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Comma-separated.
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Model::Graphconv, Model::Graphsage, Model::Gat])]
    pub models: Vec<Model>,
    /// Comma-separated block counts.
    #[arg(long, value_delimiter = ',', default_values_t = [300, 1000, 3000])]
    pub blocks: Vec<usize>,
    #[arg(long, default_value_t = 50)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.01)]
    pub lr: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}
