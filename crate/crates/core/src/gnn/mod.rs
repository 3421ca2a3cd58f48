//! GraphConv, GraphSAGE and GAT layers with analytic gradients, plus a
//! masked node-classification training loop.

mod activation;
mod checkpoint;
mod data;
mod layer;
mod loss;
mod model;
mod train;

pub use self::activation::{leaky_relu, Activation};
pub use self::checkpoint::{checkpoint_from_json, checkpoint_to_json, CHECKPOINT_FORMAT};
pub use self::data::{high_activity_labels, proxy_task, Masks, PROXY_INPUT_COLUMNS};
pub use self::layer::{
    gat_attention, gat_forward, gatrl_forward, graphconv_forward, sage_forward, sage_operator, AttentionMatrix,
    Layer, LayerCache, LayerKind, LayerParams, Pooling,
};
pub use self::loss::{masked_accuracy, masked_cross_entropy, masked_cross_entropy_grad};
pub use self::model::{ClassifierHead, ForwardPass, GnnModel, LayerType, ModelGrads, ModelSpec};
pub use self::train::{train_node_classifier, write_history_csv, EpochRecord, GnnTrainer, TrainConfig, TrainReport};

use crate::dense::ShapeError;

#[derive(Debug, thiserror::Error)]
pub enum GnnError {
    #[error(transparent)]
    Shape(#[from] ShapeError),
    #[error("mask selects no nodes")]
    EmptyMask,
    #[error("node {node} has label {label} but the model has {classes} classes")]
    LabelOutOfRange { node: usize, label: usize, classes: usize },
    #[error("invalid masks: {0}")]
    InvalidMasks(String),
    #[error("invalid model spec: {0}")]
    InvalidSpec(String),
    #[error("training diverged at epoch {epoch} (loss {loss})")]
    Divergence { epoch: usize, loss: f64 },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}
