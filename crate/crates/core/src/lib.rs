//! Ethereum transaction graphs, sparse GNN layers, Q-learning gas-limit
//! tuning, and a combined GAT + PPO training loop.
//!
//! Numeric core types are generic over `f32`/`f64`; the aliases below fix
//! them to `f64`.

pub mod bench;
pub mod dense;
pub mod gasopt;
pub mod gatrl;
pub mod gnn;
pub mod ingest;
pub mod optim;
pub mod report;
pub mod rl;
pub mod scalar;
pub mod txgraph;

pub type Matrix = dense::DenseMatrix<f64>;
pub type Csr = txgraph::SparseAdjacency<f64>;
pub type Graph = txgraph::TransactionGraph<f64>;
pub type Model = gnn::GnnModel<f64>;
pub type Trainer = gnn::GnnTrainer<f64>;
