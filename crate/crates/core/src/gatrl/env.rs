use crate::dense::DenseMatrix;
use crate::gnn::{masked_cross_entropy, GnnError, GnnModel, Masks};
use crate::txgraph::SparseAdjacency;

use super::GatRlError;

type Matrix = DenseMatrix<f64>;

/// Scale factors an action can apply to one column.
pub const ALLOCATION_FACTORS: [f64; 3] = [0.5, 1.0, 2.0];

/// Incremental mean and population std (Welford).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunningZScore {
    count: usize,
    mean: f64,
    m2: f64,
}

impl RunningZScore {
    /// Adds `x` and returns its z-score against all samples so far,
    /// including itself. 0 while the spread is below 1e-8.
    pub fn push(&mut self, x: f64) -> f64 {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
        let std = (self.m2 / self.count as f64).sqrt();
        if std < 1e-8 {
            0.0
        } else {
            (x - self.mean) / std
        }
    }

    pub fn count(&self) -> usize {
        self.count
    }
}

/// Z-scores of a whole episode (population std); all zeros when the spread
/// is below 1e-8.
pub fn episode_zscores(raw: &[f64]) -> Vec<f64> {
    if raw.is_empty() {
        return Vec::new();
    }
    let n = raw.len() as f64;
    let mean = raw.iter().sum::<f64>() / n;
    let std = (raw.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n).sqrt();
    if std < 1e-8 {
        vec![0.0; raw.len()]
    } else {
        raw.iter().map(|r| (r - mean) / std).collect()
    }
}

/// Per-column multiplicative scaling of fixed base features.
#[derive(Debug, Clone)]
pub struct EthereumOptimizationEnv {
    base: Matrix,
    pub masks: Masks,
    allocation: Vec<f64>,
    step: usize,
    pub horizon: usize,
    pub bounds: (f64, f64),
    normalizer: RunningZScore,
}

impl EthereumOptimizationEnv {
    pub fn new(base: Matrix, masks: Masks, horizon: usize) -> Self {
        let d = base.cols();
        Self {
            base,
            masks,
            allocation: vec![1.0; d],
            step: 0,
            horizon,
            bounds: (0.5, 2.0),
            normalizer: RunningZScore::default(),
        }
    }

    /// Starts from `allocation` instead of all ones.
    pub fn with_allocation(mut self, allocation: Vec<f64>) -> Self {
        assert_eq!(allocation.len(), self.base.cols());
        self.allocation = allocation;
        self
    }

    pub fn base(&self) -> &Matrix {
        &self.base
    }

    pub fn allocation(&self) -> &[f64] {
        &self.allocation
    }

    pub fn step_count(&self) -> usize {
        self.step
    }

    pub fn done(&self) -> bool {
        self.step >= self.horizon
    }

    pub fn n_actions(&self) -> usize {
        self.base.cols() * ALLOCATION_FACTORS.len()
    }

    /// `(column, factor)` of an action id.
    pub fn decode(&self, action: usize) -> Result<(usize, f64), GatRlError> {
        if action >= self.n_actions() {
            return Err(GatRlError::ActionOutOfRange { action, n_actions: self.n_actions() });
        }
        Ok((action / ALLOCATION_FACTORS.len(), ALLOCATION_FACTORS[action % ALLOCATION_FACTORS.len()]))
    }

    /// Observation: `log2` of each column's factor, then the episode progress.
    pub fn observation(&self) -> Vec<f64> {
        let mut s: Vec<f64> = self.allocation.iter().map(|a| a.log2()).collect();
        s.push(self.step as f64 / self.horizon.max(1) as f64);
        s
    }

    pub fn observation_dim(&self) -> usize {
        self.base.cols() + 1
    }

    /// Base features with every column scaled by its current factor.
    pub fn features(&self) -> Matrix {
        scaled_columns(&self.base, &self.allocation)
    }

    /// Multiplies the chosen column's factor (clamped to `bounds`) and returns
    /// the resulting features. The base matrix is never modified.
    pub fn apply_resource_allocation(&mut self, action: usize) -> Result<Matrix, GatRlError> {
        let (col, factor) = self.decode(action)?;
        self.allocation[col] = (self.allocation[col] * factor).clamp(self.bounds.0, self.bounds.1);
        self.step += 1;
        Ok(self.features())
    }

    /// Raw reward `−loss` on the training mask and its running z-score within
    /// this episode.
    pub fn calculate_reward(
        &mut self,
        model: &GnnModel<f64>,
        adj: &SparseAdjacency<f64>,
        features: &Matrix,
        labels: &[usize],
    ) -> Result<(f64, f64), GatRlError> {
        let raw = -training_loss(model, adj, features, labels, &self.masks.train)?;
        Ok((raw, self.normalizer.push(raw)))
    }
}

/// Column `j` multiplied by `factors[j]`; identical to `base` when every
/// factor is 1.
pub fn scaled_columns(base: &Matrix, factors: &[f64]) -> Matrix {
    if factors.iter().all(|&f| f == 1.0) {
        return base.clone();
    }
    Matrix::from_fn(base.rows(), base.cols(), |i, j| base.get(i, j) * factors[j])
}

pub fn training_loss(
    model: &GnnModel<f64>,
    adj: &SparseAdjacency<f64>,
    features: &Matrix,
    labels: &[usize],
    mask: &[bool],
) -> Result<f64, GatRlError> {
    let logits = model.logits(adj, features, 0).map_err(GnnError::from)?;
    let loss = masked_cross_entropy(&logits, labels, mask)?;
    if !loss.is_finite() {
        return Err(GatRlError::NonFiniteLoss(loss));
    }
    Ok(loss)
}
