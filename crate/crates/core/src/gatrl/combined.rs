use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::dense::DenseMatrix;
use crate::gnn::{
    masked_accuracy, train_node_classifier, GnnError, GnnModel, GnnTrainer, LayerType, Masks, ModelSpec, TrainConfig,
};
use crate::optim::OptimizerKind;
use crate::rl::{PpoAgent, PpoConfig, PpoLoss, PpoTrajectory, RlError};
use crate::txgraph::SparseAdjacency;

use super::env::{episode_zscores, scaled_columns, training_loss, EthereumOptimizationEnv};
use super::GatRlError;

type Matrix = DenseMatrix<f64>;

/// Seed of the PPO agent's own stream, kept apart from the GAT's.
pub fn ppo_seed(seed: u64) -> u64 {
    seed ^ 0x9E37_79B9_7F4A_7C15
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GatRlConfig {
    pub gat: ModelSpec,
    pub lr: f64,
    pub optimizer: OptimizerKind,
    pub ppo: PpoConfig,
    pub ppo_enabled: bool,
    pub horizon: usize,
    pub factor_bounds: (f64, f64),
    pub num_epochs: usize,
    pub seed: u64,
}

impl Default for GatRlConfig {
    fn default() -> Self {
        Self {
            gat: ModelSpec::with_layer(LayerType::Gat),
            lr: 0.01,
            optimizer: OptimizerKind::Adam,
            ppo: PpoConfig::default(),
            ppo_enabled: true,
            horizon: 16,
            factor_bounds: (0.5, 2.0),
            num_epochs: 1000,
            seed: 0,
        }
    }
}

impl GatRlConfig {
    pub fn problems(&self) -> Vec<String> {
        let mut p: Vec<String> = self.gat.validate();
        if !matches!(self.gat.layer, LayerType::Gat | LayerType::GatRl) {
            p.push(format!("gat.layer must be GAT or GAT-RL, got {}", self.gat.layer.name()));
        }
        if !(self.lr.is_finite() && self.lr >= 0.0) {
            p.push(format!("lr must be finite and non-negative, got {}", self.lr));
        }
        if self.ppo_enabled {
            p.extend(self.ppo.problems().into_iter().map(|s| format!("ppo.{s}")));
            if self.horizon == 0 {
                p.push("horizon must be positive".into());
            }
        }
        let (lo, hi) = self.factor_bounds;
        if !(lo.is_finite() && hi.is_finite() && 0.0 < lo && lo <= 1.0 && 1.0 <= hi) {
            p.push(format!("factor_bounds must satisfy 0 < lo <= 1 <= hi, got ({lo}, {hi})"));
        }
        p
    }

    /// The plain-GAT run with the same model, optimizer, budget, and seed.
    pub fn baseline(&self) -> TrainConfig {
        TrainConfig { epochs: self.num_epochs, lr: self.lr, optimizer: self.optimizer, seed: self.seed }
    }
}

/// Per-epoch losses of the combined loop.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CombinedTrace {
    pub gat_loss: Vec<f64>,
    pub ppo_loss: Vec<f64>,
}

impl CombinedTrace {
    pub fn len(&self) -> usize {
        self.gat_loss.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gat_loss.is_empty()
    }

    /// CSV `epoch,gat_loss,ppo_loss`.
    pub fn write_csv(&self, out: impl Write) -> std::io::Result<()> {
        let mut w = crate::report::csv_writer(out);
        w.write_record(["epoch", "gat_loss", "ppo_loss"])?;
        for (e, (g, p)) in self.gat_loss.iter().zip(&self.ppo_loss).enumerate() {
            w.write_record([e.to_string(), g.to_string(), p.to_string()])?;
        }
        w.flush()
    }
}

#[derive(Debug, Clone)]
pub struct CombinedRun {
    pub trace: CombinedTrace,
    pub gat: GnnModel<f64>,
    pub agent: Option<PpoAgent>,
    /// Column factors the GAT was last trained under.
    pub allocation: Vec<f64>,
    pub test_accuracy: f64,
}

fn at_epoch(epoch: usize, e: GatRlError) -> GatRlError {
    let diverged = matches!(
        e,
        GatRlError::NonFiniteLoss(_)
            | GatRlError::Gnn(GnnError::Divergence { .. })
            | GatRlError::Rl(RlError::NonFiniteLoss(_) | RlError::NonFiniteReward { .. })
    );
    if diverged {
        GatRlError::Divergence { epoch, source: Box::new(e) }
    } else {
        e
    }
}

/// Alternates one GAT step and one PPO episode plus update per epoch. The
/// GAT trains on the base features scaled by the deployed allocation; after
/// each episode the best allocation it visited replaces the deployed one if
/// it gives the current GAT a lower training loss.
pub fn train_combined(
    adj: &SparseAdjacency<f64>,
    x: &Matrix,
    labels: &[usize],
    masks: &Masks,
    cfg: &GatRlConfig,
) -> Result<CombinedRun, GatRlError> {
    let problems = cfg.problems();
    if !problems.is_empty() {
        return Err(GatRlError::InvalidConfig(problems.join("; ")));
    }
    masks.validate(x.rows())?;
    let model = GnnModel::init(cfg.gat, x.cols(), cfg.seed);
    let mut trainer = GnnTrainer::new(model, cfg.optimizer, cfg.lr);
    let n_actions = x.cols() * super::ALLOCATION_FACTORS.len();
    let mut agent = cfg.ppo_enabled.then(|| PpoAgent::new(cfg.ppo, x.cols() + 1, n_actions, ppo_seed(cfg.seed)));
    let mut allocation = vec![1.0; x.cols()];
    let mut trace = CombinedTrace::default();

    for epoch in 0..cfg.num_epochs {
        let deployed = scaled_columns(x, &allocation);
        let (loss, _) = trainer.train_step(adj, &deployed, labels, &masks.train).map_err(|e| at_epoch(epoch, e.into()))?;
        let ppo_loss = match agent.as_mut() {
            None => 0.0,
            Some(agent) => {
                let (loss, best) = ppo_episode(agent, &trainer.model, adj, x, labels, masks, &allocation, cfg)
                    .map_err(|e| at_epoch(epoch, e))?;
                let current = training_loss(&trainer.model, adj, &deployed, labels, &masks.train)
                    .map_err(|e| at_epoch(epoch, e))?;
                if best.1 < current {
                    allocation = best.0;
                }
                loss.total
            }
        };
        trace.gat_loss.push(loss);
        trace.ppo_loss.push(ppo_loss);
    }

    let deployed = scaled_columns(x, &allocation);
    let logits = trainer.model.logits(adj, &deployed, trainer.epoch()).map_err(GnnError::from)?;
    let test_accuracy = masked_accuracy(&logits, labels, &masks.test);
    Ok(CombinedRun { trace, gat: trainer.model, agent, allocation, test_accuracy })
}

/// One episode from the deployed allocation and one agent update. Returns the
/// update's loss and the visited allocation with the lowest training loss.
#[allow(clippy::too_many_arguments)]
fn ppo_episode(
    agent: &mut PpoAgent,
    model: &GnnModel<f64>,
    adj: &SparseAdjacency<f64>,
    x: &Matrix,
    labels: &[usize],
    masks: &Masks,
    start: &[f64],
    cfg: &GatRlConfig,
) -> Result<(PpoLoss, (Vec<f64>, f64)), GatRlError> {
    let mut env = EthereumOptimizationEnv::new(x.clone(), masks.clone(), cfg.horizon).with_allocation(start.to_vec());
    env.bounds = cfg.factor_bounds;
    let mut traj = PpoTrajectory::default();
    let mut raw = Vec::with_capacity(cfg.horizon);
    let mut best = (start.to_vec(), f64::INFINITY);
    while !env.done() {
        let state = env.observation();
        let (action, log_prob, value) = agent.act(&state)?;
        let features = env.apply_resource_allocation(action)?;
        let (r, _) = env.calculate_reward(model, adj, &features, labels)?;
        if -r < best.1 {
            best = (env.allocation().to_vec(), -r);
        }
        raw.push(r);
        traj.push(state, action, log_prob, value, 0.0);
    }
    traj.rewards = episode_zscores(&raw);
    let (_, loss) = agent.update(traj)?;
    Ok((loss, best))
}

/// Trailing moving average; the first `window - 1` entries average what is
/// available.
pub fn smoothed(trace: &[f64], window: usize) -> Vec<f64> {
    let w = window.max(1);
    let mut sum = 0.0;
    let mut out = Vec::with_capacity(trace.len());
    for (i, v) in trace.iter().enumerate() {
        sum += v;
        if i >= w {
            sum -= trace[i - w];
        }
        out.push(sum / (i + 1).min(w) as f64);
    }
    out
}

/// Mean of the last `window` entries; NaN for an empty trace.
pub fn final_smoothed(trace: &[f64], window: usize) -> f64 {
    let k = window.max(1).min(trace.len());
    trace[trace.len() - k..].iter().sum::<f64>() / k as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GatComparison {
    pub gat_loss: Vec<f64>,
    pub gatrl_loss: Vec<f64>,
    pub ppo_loss: Vec<f64>,
    pub gat_test_accuracy: f64,
    pub gatrl_test_accuracy: f64,
    pub allocation: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonSummary {
    pub epochs: usize,
    pub smoothing_window: usize,
    pub gat_final_loss: f64,
    pub gatrl_final_loss: f64,
    pub gat_test_accuracy: f64,
    pub gatrl_test_accuracy: f64,
    pub allocation: Vec<f64>,
}

impl GatComparison {
    pub fn summary(&self, window: usize) -> ComparisonSummary {
        ComparisonSummary {
            epochs: self.gat_loss.len(),
            smoothing_window: window,
            gat_final_loss: final_smoothed(&self.gat_loss, window),
            gatrl_final_loss: final_smoothed(&self.gatrl_loss, window),
            gat_test_accuracy: self.gat_test_accuracy,
            gatrl_test_accuracy: self.gatrl_test_accuracy,
            allocation: self.allocation.clone(),
        }
    }

    /// CSV `epoch,gat_loss,gatrl_loss,ppo_loss`.
    pub fn write_csv(&self, out: impl Write) -> std::io::Result<()> {
        let mut w = crate::report::csv_writer(out);
        w.write_record(["epoch", "gat_loss", "gatrl_loss", "ppo_loss"])?;
        for e in 0..self.gat_loss.len() {
            w.write_record([
                e.to_string(),
                self.gat_loss[e].to_string(),
                self.gatrl_loss[e].to_string(),
                self.ppo_loss[e].to_string(),
            ])?;
        }
        w.flush()
    }

    /// CSV `model,final_loss,test_accuracy`.
    pub fn write_accuracy_csv(&self, window: usize, out: impl Write) -> std::io::Result<()> {
        let s = self.summary(window);
        let mut w = crate::report::csv_writer(out);
        w.write_record(["model", "final_loss", "test_accuracy"])?;
        w.write_record(["GAT".to_string(), s.gat_final_loss.to_string(), s.gat_test_accuracy.to_string()])?;
        w.write_record(["GAT-RL".to_string(), s.gatrl_final_loss.to_string(), s.gatrl_test_accuracy.to_string()])?;
        w.flush()
    }
}

/// Plain GAT and the combined loop from the same initialization and budget.
pub fn compare_gat_vs_gatrl(
    adj: &SparseAdjacency<f64>,
    x: &Matrix,
    labels: &[usize],
    masks: &Masks,
    cfg: &GatRlConfig,
) -> Result<GatComparison, GatRlError> {
    let problems = cfg.problems();
    if !problems.is_empty() {
        return Err(GatRlError::InvalidConfig(problems.join("; ")));
    }
    let plain = train_node_classifier(&cfg.gat, adj, x, labels, masks, &cfg.baseline())?;
    let combined = train_combined(adj, x, labels, masks, cfg)?;
    Ok(GatComparison {
        gat_loss: plain.losses(),
        gatrl_loss: combined.trace.gat_loss,
        ppo_loss: combined.trace.ppo_loss,
        gat_test_accuracy: plain.test_accuracy,
        gatrl_test_accuracy: combined.test_accuracy,
        allocation: combined.allocation,
    })
}
