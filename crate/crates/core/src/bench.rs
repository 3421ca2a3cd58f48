//! Accuracy and training wall time per model and block count on seeded
//! synthetic chains.

use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dense::DenseMatrix;
use crate::gnn::{proxy_task, train_node_classifier, GnnError, LayerType, Masks, ModelSpec, TrainConfig};
use crate::ingest::{synth_blocks, BlockRecord, SynthConfig};
use crate::txgraph::{build_transaction_graph, EdgeWeighting, GraphOptions, SparseAdjacency};

/// Inputs of one node-classification run.
#[derive(Debug, Clone)]
pub struct Workload {
    pub adjacency: SparseAdjacency<f64>,
    pub features: DenseMatrix<f64>,
    pub labels: Vec<usize>,
    pub masks: Masks,
}

/// Graph options used for every learning workload: undirected, count
/// weighted, with self loops, then row normalized by [`prepare_workload`].
pub fn workload_graph_options() -> GraphOptions {
    GraphOptions { directed: false, weighting: EdgeWeighting::Count, self_loops: true }
}

/// Proxy-task inputs for `blocks` with a seeded 70/30 split.
pub fn prepare_workload(blocks: &[BlockRecord], train_frac: f64, seed: u64) -> Result<Workload, GnnError> {
    let graph = build_transaction_graph::<f64>(blocks, &workload_graph_options());
    let (features, labels) = proxy_task(&graph);
    let masks = Masks::random_split(graph.n_nodes(), train_frac, seed)?;
    Ok(Workload { adjacency: graph.adjacency.row_normalize(), features, labels, masks })
}

/// Address pool of the benchmark chains. Fixed, so the graph densifies as
/// the block count grows.
pub const BENCH_POOL_SIZE: usize = 256;

pub fn bench_synth_config() -> SynthConfig {
    SynthConfig { pool_size: BENCH_POOL_SIZE, zipf_exponent: 0.8, ..SynthConfig::default() }
}

/// The synthetic benchmark workload at `n_blocks`.
pub fn synthetic_workload(n_blocks: usize, seed: u64) -> Result<Workload, GnnError> {
    prepare_workload(&synth_blocks(seed, n_blocks, &bench_synth_config()), 0.7, seed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchConfig {
    pub models: Vec<LayerType>,
    pub block_counts: Vec<usize>,
    pub epochs: usize,
    pub lr: f64,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            models: vec![LayerType::GraphConv, LayerType::GraphSage, LayerType::Gat],
            block_counts: vec![300, 1000, 3000],
            epochs: 50,
            lr: 0.01,
            seed: 0,
        }
    }
}

impl BenchConfig {
    pub fn problems(&self) -> Vec<String> {
        let mut p = Vec::new();
        if self.models.is_empty() {
            p.push("models must not be empty".to_string());
        }
        if self.block_counts.is_empty() {
            p.push("block_counts must not be empty".to_string());
        }
        if self.block_counts.contains(&0) {
            p.push("block counts must be positive".to_string());
        }
        if self.epochs == 0 {
            p.push("epochs must be positive".to_string());
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            p.push(format!("lr must be positive, got {}", self.lr));
        }
        p
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub model: String,
    pub blocks: usize,
    pub accuracy: f64,
    /// Training loop only.
    pub train_seconds: f64,
    /// Block generation, graph construction, and training.
    pub total_seconds: f64,
}

/// Runs every (block count, model) cell sequentially.
pub fn run_bench(cfg: &BenchConfig) -> Result<Vec<BenchRow>, GnnError> {
    let problems = cfg.problems();
    if !problems.is_empty() {
        return Err(GnnError::InvalidSpec(problems.join("; ")));
    }
    let train = TrainConfig { epochs: cfg.epochs, lr: cfg.lr, seed: cfg.seed, ..TrainConfig::default() };
    let mut rows = Vec::new();
    for &blocks in &cfg.block_counts {
        for &model in &cfg.models {
            let total = Instant::now();
            let w = synthetic_workload(blocks, cfg.seed)?;
            let start = Instant::now();
            let report =
                train_node_classifier(&ModelSpec::with_layer(model), &w.adjacency, &w.features, &w.labels, &w.masks, &train)?;
            let train_seconds = start.elapsed().as_secs_f64();
            rows.push(BenchRow {
                model: model.name().to_string(),
                blocks,
                accuracy: report.test_accuracy,
                train_seconds,
                total_seconds: total.elapsed().as_secs_f64(),
            });
        }
    }
    Ok(rows)
}

/// CSV `model,blocks,accuracy,train_seconds,total_seconds`.
pub fn write_bench_csv(rows: &[BenchRow], out: impl Write) -> std::io::Result<()> {
    let mut w = crate::report::csv_writer(out);
    w.write_record(["model", "blocks", "accuracy", "train_seconds", "total_seconds"])?;
    for r in rows {
        w.write_record([
            r.model.clone(),
            r.blocks.to_string(),
            r.accuracy.to_string(),
            format!("{:.6}", r.train_seconds),
            format!("{:.6}", r.total_seconds),
        ])?;
    }
    w.flush()
}
