use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check, CongestionMode, GasError};
use crate::rl::{DiscreteEnv, EnvStep};

/// Transactions arriving per block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Arrivals {
    Fixed(usize),
    /// Inclusive bounds, drawn uniformly per block.
    Uniform { min: usize, max: usize },
}

impl Arrivals {
    pub fn max(self) -> usize {
        match self {
            Arrivals::Fixed(n) => n,
            Arrivals::Uniform { max, .. } => max,
        }
    }

    /// `Fixed` never touches the RNG.
    pub fn draw(self, rng: &mut impl Rng) -> usize {
        match self {
            Arrivals::Fixed(n) => n,
            Arrivals::Uniform { min, max } => rng.random_range(min..=max.max(min)),
        }
    }
}

/// How unserved demand enters the processing time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PenaltyMode {
    /// `λ · congestion · n_pending`: λ per excluded transaction.
    #[default]
    PerExcluded,
    /// `λ · congestion`.
    Fraction,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GasEnvConfig {
    /// Seconds per included transaction.
    pub t_per_tx: f64,
    pub g_per_tx: u64,
    /// Seconds added to every block.
    pub overhead: f64,
    /// λ; `None` means `10 · t_per_tx`.
    pub penalty_weight: Option<f64>,
    pub penalty: PenaltyMode,
    pub congestion: CongestionMode,
    pub arrivals: Arrivals,
    /// Excluded transactions carried into the next block, at most this many.
    pub backlog_cap: usize,
    pub gas_increment: u64,
    pub max_gas_limit: u64,
    /// Blocks per episode.
    pub horizon: usize,
    pub pending_buckets: usize,
    pub congestion_buckets: usize,
    pub gas_buckets: usize,
    /// Up to this fraction of the includable transactions may randomly fail
    /// to make it into the block.
    pub inclusion_noise: f64,
}

impl Default for GasEnvConfig {
    fn default() -> Self {
        Self {
            t_per_tx: 0.01,
            g_per_tx: 21_000,
            overhead: 0.0,
            penalty_weight: None,
            penalty: PenaltyMode::PerExcluded,
            congestion: CongestionMode::Excluded,
            arrivals: Arrivals::Fixed(40),
            backlog_cap: 40,
            gas_increment: 84_000,
            max_gas_limit: 16 * 84_000,
            horizon: 64,
            pending_buckets: 8,
            congestion_buckets: 4,
            gas_buckets: 16,
            inclusion_noise: 0.0,
        }
    }
}

impl GasEnvConfig {
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
        if let Some(l) = self.penalty_weight {
            if !(l >= 0.0 && l.is_finite()) {
                p.push(format!("penalty_weight must be non-negative, got {l}"));
            }
        }
        if let Arrivals::Uniform { min, max } = self.arrivals {
            if min > max {
                p.push(format!("arrivals min {min} exceeds max {max}"));
            }
        }
        if self.gas_increment == 0 {
            p.push("gas_increment must be positive".into());
        }
        if self.max_gas_limit < self.gas_increment {
            p.push(format!("max_gas_limit {} is below gas_increment {}", self.max_gas_limit, self.gas_increment));
        }
        if self.horizon == 0 {
            p.push("horizon must be positive".into());
        }
        if self.pending_buckets == 0 || self.congestion_buckets == 0 || self.gas_buckets == 0 {
            p.push("bucket counts must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.inclusion_noise) {
            p.push(format!("inclusion_noise must be in [0, 1], got {}", self.inclusion_noise));
        }
        p
    }

    pub fn validate(&self) -> Result<(), GasError> {
        check(self.problems())
    }

    pub fn lambda(&self) -> f64 {
        self.penalty_weight.unwrap_or(10.0 * self.t_per_tx)
    }

    /// Upper end of the pending-count grid.
    pub fn max_pending(&self) -> usize {
        self.backlog_cap + self.arrivals.max()
    }

    /// Gas limits reachable from `gas_increment` in whole steps, capped.
    pub fn gas_levels(&self) -> Vec<u64> {
        let mut levels: Vec<u64> = (1..).map(|k| k * self.gas_increment).take_while(|&g| g <= self.max_gas_limit).collect();
        if levels.last() != Some(&self.max_gas_limit) {
            levels.push(self.max_gas_limit);
        }
        levels
    }

    /// Smallest gas limit that includes `n` transactions.
    pub fn optimal_gas_limit(&self, n: usize) -> u64 {
        n as u64 * self.g_per_tx
    }

    pub fn n_states(&self) -> usize {
        self.pending_buckets * self.congestion_buckets * self.gas_buckets
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GasAction {
    Decrease,
    Hold,
    Increase,
}

impl GasAction {
    pub const ALL: [GasAction; 3] = [GasAction::Decrease, GasAction::Hold, GasAction::Increase];

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }
}

/// Observable state: the raw values and their bucketed id.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GasEnvState {
    pub n_pending: usize,
    pub congestion: f64,
    pub gas_limit: u64,
    pub pending_bucket: usize,
    pub congestion_bucket: usize,
    pub gas_bucket: usize,
    pub id: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub n_pending: usize,
    pub gas_limit: u64,
    pub txs_included: usize,
    pub block_processing_time: f64,
    pub congestion: f64,
    pub reward: f64,
}

fn bucket(x: f64, hi: f64, n: usize) -> usize {
    if hi <= 0.0 {
        return 0;
    }
    ((x / hi * n as f64).floor() as usize).min(n - 1)
}

/// Block-processing simulator. Gas limit, backlog and the next block's
/// pending count are carried between steps.
#[derive(Debug, Clone)]
pub struct GasEnv {
    cfg: GasEnvConfig,
    gas_limit: u64,
    backlog: usize,
    n_pending: usize,
    congestion: f64,
    t: usize,
}

impl GasEnv {
    pub fn new(cfg: GasEnvConfig) -> Result<Self, GasError> {
        cfg.validate()?;
        let gas_limit = cfg.gas_increment;
        Ok(Self { cfg, gas_limit, backlog: 0, n_pending: 0, congestion: 0.0, t: 0 })
    }

    pub fn config(&self) -> &GasEnvConfig {
        &self.cfg
    }

    pub fn state(&self) -> GasEnvState {
        let c = &self.cfg;
        let pending_bucket = bucket(self.n_pending as f64, (c.max_pending() + 1) as f64, c.pending_buckets);
        let congestion_bucket = bucket(self.congestion, 1.0 + 1e-9, c.congestion_buckets);
        let span = (c.max_gas_limit - c.gas_increment) as f64;
        let gas_bucket = if span > 0.0 {
            bucket((self.gas_limit - c.gas_increment) as f64, span + 1.0, c.gas_buckets)
        } else {
            0
        };
        let id = (pending_bucket * c.congestion_buckets + congestion_bucket) * c.gas_buckets + gas_bucket;
        GasEnvState {
            n_pending: self.n_pending,
            congestion: self.congestion,
            gas_limit: self.gas_limit,
            pending_bucket,
            congestion_bucket,
            gas_bucket,
            id,
        }
    }

    /// Sets the gas limit (clamped) and the pending count directly.
    pub fn set(&mut self, gas_limit: u64, n_pending: usize) {
        self.gas_limit = gas_limit.clamp(self.cfg.gas_increment, self.cfg.max_gas_limit);
        self.n_pending = n_pending;
        self.backlog = 0;
        self.congestion = 0.0;
    }

    /// Starts an episode at a uniformly drawn gas level with an empty backlog.
    pub fn reset_with(&mut self, rng: &mut ChaCha8Rng) -> GasEnvState {
        let levels = self.cfg.gas_levels();
        self.gas_limit = levels[rng.random_range(0..levels.len())];
        self.backlog = 0;
        self.congestion = 0.0;
        self.t = 0;
        self.n_pending = self.cfg.arrivals.draw(rng);
        self.state()
    }

    /// Applies `action`, processes one block, then refreshes the pending
    /// count from the arrival process.
    pub fn env_step(&mut self, action: GasAction, rng: &mut ChaCha8Rng) -> (GasEnvState, StepOutcome) {
        let c = self.cfg;
        self.gas_limit = match action {
            GasAction::Decrease => self.gas_limit.saturating_sub(c.gas_increment),
            GasAction::Hold => self.gas_limit,
            GasAction::Increase => self.gas_limit.saturating_add(c.gas_increment),
        }
        .clamp(c.gas_increment, c.max_gas_limit);

        let pending = self.n_pending;
        let capacity = (self.gas_limit / c.g_per_tx) as usize;
        let mut included = pending.min(capacity);
        if c.inclusion_noise > 0.0 {
            let u: f64 = rng.random();
            included -= (included as f64 * c.inclusion_noise * u).floor() as usize;
        }
        let congestion = c.congestion.level(pending, included);
        let penalty = match c.penalty {
            PenaltyMode::PerExcluded => c.lambda() * congestion * pending as f64,
            PenaltyMode::Fraction => c.lambda() * congestion,
        };
        let time = c.overhead + c.t_per_tx * included as f64 + penalty;
        let outcome = StepOutcome {
            n_pending: pending,
            gas_limit: self.gas_limit,
            txs_included: included,
            block_processing_time: time,
            congestion,
            reward: -time,
        };

        self.backlog = (pending - included).min(c.backlog_cap);
        self.congestion = congestion;
        self.n_pending = self.backlog + c.arrivals.draw(rng);
        self.t += 1;
        (self.state(), outcome)
    }
}

impl DiscreteEnv for GasEnv {
    type Info = StepOutcome;

    fn n_states(&self) -> usize {
        self.cfg.n_states()
    }

    fn n_actions(&self) -> usize {
        GasAction::ALL.len()
    }

    fn reset(&mut self, rng: &mut ChaCha8Rng) -> usize {
        self.reset_with(rng).id
    }

    fn step(&mut self, action: usize, rng: &mut ChaCha8Rng) -> EnvStep<StepOutcome> {
        let action = GasAction::from_index(action).expect("action index below n_actions");
        let (state, outcome) = self.env_step(action, rng);
        EnvStep {
            next_state: state.id,
            reward: outcome.reward,
            terminal: false,
            truncated: self.t >= self.cfg.horizon,
            info: outcome,
        }
    }
}
