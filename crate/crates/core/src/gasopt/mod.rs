//! Gas-limit optimization: the throughput model, a block-processing
//! simulator for tabular RL, and the deterministic gas-limit search.

mod algorithm1;
mod env;
mod experiment;

pub use self::algorithm1::*;
pub use self::env::*;
pub use self::experiment::*;

use serde::{Deserialize, Serialize};

use crate::rl::RlError;

#[derive(Debug, thiserror::Error)]
pub enum GasError {
    #[error("time per transaction must be positive, got {0}")]
    NonPositiveTime(f64),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Rl(#[from] RlError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn check(problems: Vec<String>) -> Result<(), GasError> {
    if problems.is_empty() {
        Ok(())
    } else {
        Err(GasError::InvalidConfig(problems.join("; ")))
    }
}

/// Transactions processed: `min(N, G / T)`.
pub fn throughput(n: f64, g: f64, t: f64) -> Result<f64, GasError> {
    if !(t > 0.0) {
        return Err(GasError::NonPositiveTime(t));
    }
    Ok(n.min(g / t))
}

/// Least `G` with `G / T ≥ N` in floating point; `N·T` up to rounding.
pub fn optimal_gas_closed_form(n: f64, t: f64) -> Result<f64, GasError> {
    if !(t > 0.0) {
        return Err(GasError::NonPositiveTime(t));
    }
    let mut g = n * t;
    while g / t < n {
        g = g.next_up();
    }
    while g > 0.0 && g.next_down() / t >= n {
        g = g.next_down();
    }
    Ok(g)
}

/// How congestion is measured for a block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CongestionMode {
    /// Fraction of pending transactions left out.
    #[default]
    Excluded,
    /// Fraction of the above-median-fee half left out, assuming inclusion
    /// in fee order.
    FeeTiered,
}

impl CongestionMode {
    pub fn level(self, pending: usize, included: usize) -> f64 {
        match self {
            CongestionMode::Excluded if pending > 0 => (pending - included.min(pending)) as f64 / pending as f64,
            CongestionMode::FeeTiered if pending >= 2 => {
                let high = pending / 2;
                high.saturating_sub(included) as f64 / high as f64
            }
            _ => 0.0,
        }
    }
}

/// The static workload seen by the gas-limit search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GasModel {
    pub n_pending: usize,
    /// Seconds per transaction.
    pub t_per_tx: f64,
    pub g_limit: u64,
    pub g_per_tx: u64,
    /// Seconds added to every block.
    #[serde(default)]
    pub overhead: f64,
    #[serde(default)]
    pub congestion: CongestionMode,
}

impl GasModel {
    pub fn problems(&self) -> Vec<String> {
        let mut p = Vec::new();
        if !(self.t_per_tx > 0.0 && self.t_per_tx.is_finite()) {
            p.push(format!("t_per_tx must be positive, got {}", self.t_per_tx));
        }
        if self.g_per_tx == 0 {
            p.push("g_per_tx must be positive".into());
        }
        if !(self.overhead >= 0.0 && self.overhead.is_finite()) {
            p.push(format!("overhead must be non-negative, got {}", self.overhead));
        }
        p
    }

    pub fn included(&self, g: u64) -> usize {
        self.n_pending.min((g / self.g_per_tx) as usize)
    }

    /// `(expected processing time, congestion)` of one block at limit `g`.
    pub fn simulate(&self, g: u64) -> (f64, f64) {
        let inc = self.included(g);
        (self.overhead + self.t_per_tx * inc as f64, self.congestion.level(self.n_pending, inc))
    }
}
