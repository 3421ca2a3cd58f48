//! Environment-agnostic agents: tabular Q-learning and PPO.

mod ppo;
mod qlearn;

pub use self::ppo::*;
pub use self::qlearn::*;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RlError {
    #[error("invalid hyperparameters: {0}")]
    InvalidHyper(String),
    #[error("empty action set")]
    EmptyActions,
    #[error("action {action} out of range for {n_actions} actions")]
    ActionOutOfRange { action: usize, n_actions: usize },
    #[error("non-finite reward {reward} in episode {episode}, step {step}")]
    NonFiniteReward { episode: usize, step: usize, reward: f64 },
    #[error("empty trajectory")]
    EmptyTrajectory,
    #[error("trajectory fields have mismatched lengths")]
    LengthMismatch,
    #[error("non-finite PPO loss {0}")]
    NonFiniteLoss(f64),
    #[error(transparent)]
    Shape(#[from] crate::dense::ShapeError),
}
