//! Subcommand implementations behind the `ethgnn` binary.

pub mod args;
mod output;

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use ethgnn::bench::{prepare_workload, run_bench, write_bench_csv, BenchConfig, Workload};
use ethgnn::gasopt::{
    algorithm1_optimize, greedy_throughput, optimal_gas_closed_form, Algorithm1Config, Arrivals, GasExperimentConfig,
    GasModel,
};
use ethgnn::gatrl::{compare_gat_vs_gatrl, GatRlConfig};
use ethgnn::gnn::{checkpoint_to_json, train_node_classifier, write_history_csv, ModelSpec, TrainConfig};
use ethgnn::ingest::{cache_read, cache_write, fetch_range, synth_blocks, BlockRange, BlockRecord, RpcClient, SynthConfig};
use ethgnn::txgraph::{build_transaction_graph, write_edge_ndjson, write_graph_text, GraphOptions};
use serde::Serialize;
use serde_json::json;

use self::args::*;
pub use self::output::{fingerprint, Artifacts};

/// Exit status 2: the run was rejected before any work started.
pub const EXIT_CONFIG: i32 = 2;
/// Exit status 3: the run failed while working.
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug)]
pub enum CliError {
    /// Every validation problem found.
    Config(Vec<String>),
    Runtime(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(problems) => {
                writeln!(f, "invalid configuration:")?;
                for p in problems {
                    writeln!(f, "  - {p}")?;
                }
                Ok(())
            }
            CliError::Runtime(e) => write!(f, "error: {e:#}"),
        }
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Runtime(e)
    }
}

type CliResult<T = ()> = Result<T, CliError>;

fn check(problems: Vec<String>) -> CliResult {
    if problems.is_empty() {
        Ok(())
    } else {
        Err(CliError::Config(problems))
    }
}

fn runtime<E: Into<anyhow::Error>>(context: impl std::fmt::Display) -> impl FnOnce(E) -> CliError {
    move |e| CliError::Runtime(e.into().context(context.to_string()))
}

pub fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Fetch(a) => cmd_fetch(&cli.out, a),
        Command::Graph(a) => cmd_graph(&cli.out, a),
        Command::Train(a) => cmd_train(&cli.out, a),
        Command::GasOpt(a) => cmd_gas_opt(&cli.out, a),
        Command::Gatrl(a) => cmd_gatrl(&cli.out, a),
        Command::Bench(a) => cmd_bench(&cli.out, a),
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "snake_case")]
enum Source {
    Cache(PathBuf),
    Synthetic { blocks: usize, seed: u64 },
}

impl Source {
    fn from_args(a: &SourceArgs, problems: &mut Vec<String>) -> Option<Self> {
        match (&a.cache, a.synthetic_blocks) {
            (Some(p), None) => Some(Source::Cache(p.clone())),
            (None, Some(0)) => {
                problems.push("--synthetic-blocks must be positive".into());
                None
            }
            (None, Some(n)) => Some(Source::Synthetic { blocks: n, seed: a.seed }),
            _ => {
                problems.push("exactly one of --cache or --synthetic-blocks is required".into());
                None
            }
        }
    }

    fn load(&self) -> CliResult<Vec<BlockRecord>> {
        match self {
            Source::Cache(path) => {
                let blocks = cache_read(path).map_err(runtime(format!("reading cache {}", path.display())))?;
                if blocks.is_empty() {
                    return Err(anyhow::anyhow!("cache {} contains no blocks", path.display()).into());
                }
                Ok(blocks)
            }
            Source::Synthetic { blocks, seed } => Ok(synth_blocks(*seed, *blocks, &SynthConfig::default())),
        }
    }
}

fn load_json<T: serde::de::DeserializeOwned>(path: &Path, problems: &mut Vec<String>) -> Option<T> {
    let parsed = std::fs::read_to_string(path)
        .map_err(|e| e.to_string())
        .and_then(|text| serde_json::from_str(&text).map_err(|e| e.to_string()));
    match parsed {
        Ok(v) => Some(v),
        Err(e) => {
            problems.push(format!("config {}: {e}", path.display()));
            None
        }
    }
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(runtime(format!("creating {}", path.display())))
}

pub fn cmd_fetch(out: &Path, a: FetchArgs) -> CliResult {
    let mut problems = Vec::new();
    if a.start > a.end {
        problems.push(format!("--start {} is after --end {}", a.start, a.end));
    }
    if a.parallelism == 0 {
        problems.push("--parallelism must be at least 1".into());
    }
    if !a.synthetic && a.rpc_url.as_deref().is_none_or(str::is_empty) {
        problems.push("an endpoint is required: pass --rpc-url or set ETH_RPC_URL (or use --synthetic)".into());
    }
    check(problems)?;
    let cache = a.cache.clone().unwrap_or_else(|| out.join("blocks.ndjson"));
    let config = json!({
        "start": a.start,
        "end": a.end,
        "source": if a.synthetic { json!({"synthetic": {"seed": a.seed}}) } else { json!({"rpc_url": a.rpc_url}) },
    });
    let art = Artifacts::new(out, "fetch", &config)?;
    let blocks = if a.synthetic {
        let cfg = SynthConfig { start_block: a.start, ..SynthConfig::default() };
        synth_blocks(a.seed, (a.end - a.start + 1) as usize, &cfg)
    } else {
        let client = RpcClient::new(a.rpc_url.clone().unwrap_or_default());
        let range = BlockRange::new(a.start, a.end).map_err(runtime("block range"))?;
        fetch_range(&client, range, a.parallelism).map_err(runtime("fetching blocks"))?
    };
    if let Some(dir) = cache.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(runtime(format!("creating {}", dir.display())))?;
    }
    cache_write(&cache, &blocks).map_err(runtime(format!("writing cache {}", cache.display())))?;
    art.write_json("fetch_summary.json", &json!({"blocks": blocks.len(), "cache": cache}))?;
    eprintln!("wrote {} blocks to {}", blocks.len(), cache.display());
    Ok(())
}

pub fn cmd_graph(out: &Path, a: GraphArgs) -> CliResult {
    let mut problems = Vec::new();
    let source = Source::from_args(&a.source, &mut problems);
    check(problems)?;
    let source = source.expect("validated");
    let opts = GraphOptions { directed: !a.undirected, weighting: a.weighting.into(), self_loops: a.self_loops };
    let art = Artifacts::new(out, "graph", &json!({"source": source, "options": opts}))?;
    let blocks = source.load()?;
    let graph = build_transaction_graph::<f64>(&blocks, &opts);
    let text = write_graph_text(&graph.adjacency, &graph.features).map_err(runtime("encoding graph"))?;
    std::fs::write(art.path("graph.txt"), text).map_err(runtime("writing graph.txt"))?;
    write_edge_ndjson(&graph.adjacency, &graph.index, create(&art.path("edges.ndjson"))?)
        .map_err(runtime("writing edges.ndjson"))?;
    art.write_json(
        "graph_summary.json",
        &json!({"blocks": blocks.len(), "nodes": graph.n_nodes(), "edges": graph.adjacency.nnz()}),
    )?;
    Ok(())
}

fn workload(source: &Source, train_frac: f64, seed: u64) -> CliResult<Workload> {
    let blocks = source.load()?;
    prepare_workload(&blocks, train_frac, seed).map_err(runtime("preparing workload"))
}

pub fn cmd_train(out: &Path, a: TrainArgs) -> CliResult {
    let mut problems = Vec::new();
    let source = Source::from_args(&a.source, &mut problems);
    let spec = ModelSpec { hidden_dim: a.hidden, n_layers: a.layers, ..ModelSpec::with_layer(a.model.into()) };
    problems.extend(spec.validate());
    if !(a.lr.is_finite() && a.lr >= 0.0) {
        problems.push(format!("--lr must be finite and non-negative, got {}", a.lr));
    }
    if !(a.train_frac > 0.0 && a.train_frac < 1.0) {
        problems.push(format!("--train-frac must be in (0, 1), got {}", a.train_frac));
    }
    check(problems)?;
    let source = source.expect("validated");
    let cfg = TrainConfig { epochs: a.epochs, lr: a.lr, seed: a.source.seed, ..TrainConfig::default() };
    let art =
        Artifacts::new(out, "train", &json!({"source": source, "spec": spec, "train": cfg, "train_frac": a.train_frac}))?;
    let w = workload(&source, a.train_frac, a.source.seed)?;
    let report = train_node_classifier(&spec, &w.adjacency, &w.features, &w.labels, &w.masks, &cfg)
        .map_err(runtime("training"))?;
    write_history_csv(&report.history, create(&art.path("train_loss.csv"))?).map_err(runtime("writing train_loss.csv"))?;
    std::fs::write(art.path("checkpoint.json"), checkpoint_to_json(&report.model))
        .map_err(runtime("writing checkpoint.json"))?;
    art.write_json(
        "train_summary.json",
        &json!({
            "model": spec.layer.name(),
            "nodes": w.labels.len(),
            "final_loss": report.history.last().map(|r| r.loss),
            "test_accuracy": report.test_accuracy,
        }),
    )?;
    Ok(())
}

pub fn cmd_gas_opt(out: &Path, a: GasOptArgs) -> CliResult {
    let mut problems = Vec::new();
    let mut cfg = match &a.config {
        Some(p) => load_json(p, &mut problems).unwrap_or_default(),
        None => GasExperimentConfig::default(),
    };
    if let Some(e) = a.episodes {
        cfg.episodes = e;
    }
    if let Some(n) = a.arrivals {
        cfg.env.arrivals = Arrivals::Fixed(n);
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    problems.extend(cfg.problems());
    match a.mode {
        GasMode::Rl => {
            if cfg.episodes == 0 {
                problems.push("episodes must be positive".into());
            }
            check(problems)?;
            gas_rl(out, &cfg)
        }
        GasMode::Search => {
            let env = cfg.env;
            let n = env.arrivals.max();
            let model = GasModel {
                n_pending: n,
                t_per_tx: env.t_per_tx,
                g_limit: env.max_gas_limit,
                g_per_tx: env.g_per_tx,
                overhead: env.overhead,
                congestion: env.congestion,
            };
            let search = Algorithm1Config {
                gas_limit: a.start_gas.unwrap_or(env.gas_increment),
                gas_limit_increment: env.gas_increment,
                max_gas_limit: env.max_gas_limit,
                target_time: a.target_time.unwrap_or(env.overhead + env.t_per_tx * n as f64),
                congestion_threshold: a.congestion_threshold,
                max_iterations: 1000,
            };
            problems.extend(search.problems());
            problems.extend(model.problems());
            check(problems)?;
            gas_search(out, &model, &search)
        }
    }
}

fn gas_rl(out: &Path, cfg: &GasExperimentConfig) -> CliResult {
    let art = Artifacts::new(out, "gas-opt", &json!({"mode": "rl", "experiment": cfg}))?;
    let exp = cfg.run().map_err(runtime("gas experiment"))?;
    exp.write_csv(create(&art.path("gas_rl.csv"))?).map_err(runtime("writing gas_rl.csv"))?;
    let n = cfg.env.arrivals.max() as f64;
    let optimum = optimal_gas_closed_form(n, cfg.env.g_per_tx as f64).map_err(runtime("closed form"))?;
    let greedy = greedy_throughput(&cfg.env, &exp.table, 20, cfg.seed.wrapping_add(1)).map_err(runtime("greedy rollout"))?;
    let (first_mean, first_var) = exp.throughput_moments(0);
    let (last_mean, last_var) = exp.throughput_moments(3);
    art.write_json(
        "gas_summary.json",
        &json!({
            "pending_per_block": n,
            "closed_form_gas_limit": optimum,
            "first_quartile": {"mean_throughput": first_mean, "variance": first_var},
            "last_quartile": {"mean_throughput": last_mean, "variance": last_var},
            "final_epsilon": exp.epsilons.last(),
            "greedy_mean_throughput": greedy,
        }),
    )?;
    Ok(())
}

fn gas_search(out: &Path, model: &GasModel, search: &Algorithm1Config) -> CliResult {
    let art = Artifacts::new(out, "gas-opt", &json!({"mode": "search", "model": model, "search": search}))?;
    let r = algorithm1_optimize(search, model).map_err(runtime("gas-limit search"))?;
    r.write_trace_csv(create(&art.path("gas_search.csv"))?).map_err(runtime("writing gas_search.csv"))?;
    art.write_json(
        "gas_summary.json",
        &json!({"gas_limit": r.gas_limit, "converged": r.converged, "iterations": r.trace.len()}),
    )?;
    Ok(())
}

pub fn cmd_gatrl(out: &Path, a: GatrlArgs) -> CliResult {
    let mut problems = Vec::new();
    let source = Source::from_args(&a.source, &mut problems);
    let mut cfg = match &a.config {
        Some(p) => load_json(p, &mut problems).unwrap_or_default(),
        None => GatRlConfig::default(),
    };
    cfg.seed = a.source.seed;
    if let Some(e) = a.epochs {
        cfg.num_epochs = e;
    }
    if let Some(h) = a.horizon {
        cfg.horizon = h;
    }
    if a.no_ppo {
        cfg.ppo_enabled = false;
    }
    if a.window == 0 {
        problems.push("--window must be positive".into());
    }
    problems.extend(cfg.problems());
    check(problems)?;
    let source = source.expect("validated");
    let art = Artifacts::new(out, "gatrl", &json!({"source": source, "config": cfg, "window": a.window}))?;
    let w = workload(&source, 0.7, cfg.seed)?;
    let cmp = compare_gat_vs_gatrl(&w.adjacency, &w.features, &w.labels, &w.masks, &cfg)
        .map_err(runtime("combined training"))?;
    cmp.write_csv(create(&art.path("gatrl_loss.csv"))?).map_err(runtime("writing gatrl_loss.csv"))?;
    cmp.write_accuracy_csv(a.window, create(&art.path("gatrl_accuracy.csv"))?)
        .map_err(runtime("writing gatrl_accuracy.csv"))?;
    art.write_json("gatrl_summary.json", &cmp.summary(a.window))?;
    Ok(())
}

pub fn cmd_bench(out: &Path, a: BenchArgs) -> CliResult {
    let cfg = BenchConfig {
        models: a.models.iter().map(|&m| m.into()).collect(),
        block_counts: a.blocks.clone(),
        epochs: a.epochs,
        lr: a.lr,
        seed: a.seed,
    };
    check(cfg.problems())?;
    let art = Artifacts::new(out, "bench", &cfg)?;
    let rows = run_bench(&cfg).map_err(runtime("benchmark"))?;
    write_bench_csv(&rows, create(&art.path("bench.csv"))?).map_err(runtime("writing bench.csv"))?;
    Ok(())
}
