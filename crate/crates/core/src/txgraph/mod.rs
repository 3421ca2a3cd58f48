//! Address-level transaction graphs and the sparse primitives the GNN layers use.

mod build;
mod io;
mod sample;
mod sparse;

pub use self::build::{
    build_transaction_graph, AddressIndex, EdgeWeighting, GraphOptions, Standardizer, TransactionGraph,
    COL_TX_RECEIVED, COL_TX_SENT, FEATURE_NAMES,
};
pub use self::io::{read_graph_text, write_edge_ndjson, write_graph_text};
pub use self::sample::{sample_neighbors, sampler_rng, SamplerConfig};
pub use self::sparse::SparseAdjacency;

use crate::dense::ShapeError;

#[derive(Debug, thiserror::Error)]
pub enum GraphError {
    #[error("entry ({row}, {col}) outside a {n_nodes}-node graph")]
    IndexOutOfRange { row: usize, col: usize, n_nodes: usize },
    #[error("CSR invariant violated: {0}")]
    Invariant(String),
    #[error("graph file line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Shape(#[from] ShapeError),
}
