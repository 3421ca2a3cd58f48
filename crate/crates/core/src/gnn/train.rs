use std::io::Write;

use serde::{Deserialize, Serialize};

use super::data::Masks;
use super::loss::{masked_accuracy, masked_cross_entropy_grad};
use super::model::{GnnModel, ModelSpec};
use super::GnnError;
use crate::dense::DenseMatrix;
use crate::optim::{Optimizer, OptimizerKind};
use crate::scalar::Scalar;
use crate::txgraph::SparseAdjacency;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub optimizer: OptimizerKind,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { epochs: 200, lr: 0.01, optimizer: OptimizerKind::Adam, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Masked training loss before this epoch's update.
    pub loss: f64,
    /// Masked test accuracy from the same forward pass.
    pub accuracy: f64,
}

/// Model plus optimizer state, advanced one full-batch epoch at a time.
#[derive(Debug, Clone)]
pub struct GnnTrainer<T> {
    pub model: GnnModel<T>,
    optimizer: Optimizer<T>,
    epoch: u64,
}

impl<T: Scalar> GnnTrainer<T> {
    pub fn new(model: GnnModel<T>, kind: OptimizerKind, lr: f64) -> Self {
        Self { model, optimizer: Optimizer::new(kind, T::lit(lr)), epoch: 0 }
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    /// One gradient step on the training mask. Returns the pre-update loss and
    /// the forward pass's logits.
    pub fn train_step(
        &mut self,
        adj: &SparseAdjacency<T>,
        x: &DenseMatrix<T>,
        labels: &[usize],
        train_mask: &[bool],
    ) -> Result<(T, DenseMatrix<T>), GnnError> {
        let pass = self.model.forward(adj, x, self.epoch)?;
        let (loss, grad) = masked_cross_entropy_grad(&pass.logits, labels, train_mask)?;
        if !loss.is_finite() {
            return Err(GnnError::Divergence { epoch: self.epoch as usize, loss: loss.to_f64_lossy() });
        }
        let grads = self.model.backward(adj, &pass, &grad)?;
        self.optimizer.step(self.model.param_slices_mut(), grads.slices());
        if !self.model.is_finite() {
            return Err(GnnError::Divergence { epoch: self.epoch as usize, loss: f64::NAN });
        }
        self.epoch += 1;
        Ok((loss, pass.logits))
    }

    /// Masked loss and accuracy without updating anything.
    pub fn evaluate(
        &self,
        adj: &SparseAdjacency<T>,
        x: &DenseMatrix<T>,
        labels: &[usize],
        mask: &[bool],
    ) -> Result<(T, f64), GnnError> {
        let logits = self.model.logits(adj, x, self.epoch)?;
        let (loss, _) = masked_cross_entropy_grad(&logits, labels, mask)?;
        Ok((loss, masked_accuracy(&logits, labels, mask)))
    }
}

#[derive(Debug, Clone)]
pub struct TrainReport<T> {
    pub model: GnnModel<T>,
    pub history: Vec<EpochRecord>,
    pub test_accuracy: f64,
}

impl<T> TrainReport<T> {
    pub fn losses(&self) -> Vec<f64> {
        self.history.iter().map(|r| r.loss).collect()
    }
}

/// Full-batch masked node classification.
pub fn train_node_classifier<T: Scalar>(
    spec: &ModelSpec,
    adj: &SparseAdjacency<T>,
    x: &DenseMatrix<T>,
    labels: &[usize],
    masks: &Masks,
    cfg: &TrainConfig,
) -> Result<TrainReport<T>, GnnError> {
    let problems = spec.validate();
    if !problems.is_empty() {
        return Err(GnnError::InvalidSpec(problems.join("; ")));
    }
    masks.validate(x.rows())?;
    let model = GnnModel::init(*spec, x.cols(), cfg.seed);
    let mut trainer = GnnTrainer::new(model, cfg.optimizer, cfg.lr);
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let (loss, logits) = trainer.train_step(adj, x, labels, &masks.train)?;
        history.push(EpochRecord {
            epoch,
            loss: loss.to_f64_lossy(),
            accuracy: masked_accuracy(&logits, labels, &masks.test),
        });
    }
    let (_, test_accuracy) = trainer.evaluate(adj, x, labels, &masks.test)?;
    Ok(TrainReport { model: trainer.model, history, test_accuracy })
}

/// `epoch,loss,accuracy` CSV.
pub fn write_history_csv<W: Write>(history: &[EpochRecord], out: W) -> csv::Result<()> {
    let mut w = crate::report::csv_writer(out);
    w.write_record(["epoch", "loss", "accuracy"])?;
    for r in history {
        w.write_record([r.epoch.to_string(), r.loss.to_string(), r.accuracy.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
