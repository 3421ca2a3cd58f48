//! GAT + PPO: a feature-scaling environment whose reward is the GAT's
//! negated training loss, and the alternating combined training loop.

mod combined;
mod env;

pub use self::combined::*;
pub use self::env::*;

use crate::gnn::GnnError;
use crate::rl::RlError;

#[derive(Debug, thiserror::Error)]
pub enum GatRlError {
    #[error("action {action} out of range for {n_actions} actions")]
    ActionOutOfRange { action: usize, n_actions: usize },
    #[error("non-finite GAT loss {0}")]
    NonFiniteLoss(f64),
    #[error("divergence at epoch {epoch}: {source}")]
    Divergence {
        epoch: usize,
        #[source]
        source: Box<GatRlError>,
    },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Gnn(#[from] GnnError),
    #[error(transparent)]
    Rl(#[from] RlError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
