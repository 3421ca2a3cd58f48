use std::io::Write;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::RlError;
use crate::dense::DenseMatrix;
use crate::optim::Adam;

type Matrix = DenseMatrix<f64>;

/// `x → tanh(x·W1 + b1)·W2 + b2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub w1: Matrix,
    pub b1: Vec<f64>,
    pub w2: Matrix,
    pub b2: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct MlpCache {
    pub hidden: Matrix,
    pub output: Matrix,
}

impl Mlp {
    /// Glorot-uniform weights, zero biases; the output layer is further
    /// multiplied by `out_scale`.
    pub fn init(d_in: usize, hidden: usize, d_out: usize, out_scale: f64, rng: &mut impl Rng) -> Self {
        let mut glorot = |r: usize, c: usize, scale: f64| {
            let lim = (6.0 / (r + c) as f64).sqrt() * scale;
            Matrix::from_fn(r, c, |_, _| (rng.random::<f64>() * 2.0 - 1.0) * lim)
        };
        let w1 = glorot(d_in, hidden, 1.0);
        let w2 = glorot(hidden, d_out, out_scale);
        Self { w1, b1: vec![0.0; hidden], w2, b2: vec![0.0; d_out] }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            w1: Matrix::zeros(self.w1.rows(), self.w1.cols()),
            b1: vec![0.0; self.b1.len()],
            w2: Matrix::zeros(self.w2.rows(), self.w2.cols()),
            b2: vec![0.0; self.b2.len()],
        }
    }

    pub fn forward(&self, x: &Matrix) -> Result<MlpCache, RlError> {
        let mut hidden = x.matmul(&self.w1)?;
        hidden.add_row_vector(&self.b1)?;
        let hidden = hidden.map(f64::tanh);
        let mut output = hidden.matmul(&self.w2)?;
        output.add_row_vector(&self.b2)?;
        Ok(MlpCache { hidden, output })
    }

    pub fn backward(&self, x: &Matrix, cache: &MlpCache, d_out: &Matrix) -> Result<Mlp, RlError> {
        let w2 = cache.hidden.t_matmul(d_out)?;
        let b2 = d_out.column_sums();
        let mut dz = d_out.matmul_t(&self.w2)?;
        for (g, h) in dz.as_mut_slice().iter_mut().zip(cache.hidden.as_slice()) {
            *g *= 1.0 - h * h;
        }
        let w1 = x.t_matmul(&dz)?;
        let b1 = dz.column_sums();
        Ok(Mlp { w1, b1, w2, b2 })
    }

    pub fn slices(&self) -> Vec<&[f64]> {
        vec![self.w1.as_slice(), &self.b1, self.w2.as_slice(), &self.b2]
    }

    pub fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        vec![self.w1.as_mut_slice(), &mut self.b1, self.w2.as_mut_slice(), &mut self.b2]
    }
}

/// PPO defaults: clip 0.2, entropy 0.01, value weight 0.5, Adam 3e-4, 4 epochs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PpoConfig {
    pub hidden: usize,
    pub clip: f64,
    pub entropy_coef: f64,
    pub value_coef: f64,
    pub lr: f64,
    pub epochs: usize,
    pub gamma: f64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self { hidden: 32, clip: 0.2, entropy_coef: 0.01, value_coef: 0.5, lr: 3e-4, epochs: 4, gamma: 0.99 }
    }
}

impl PpoConfig {
    pub fn problems(&self) -> Vec<String> {
        let mut p = Vec::new();
        if self.hidden == 0 {
            p.push("ppo hidden width must be positive".to_string());
        }
        if !(self.clip > 0.0 && self.clip < 1.0) {
            p.push(format!("ppo clip ratio must be in (0, 1), got {}", self.clip));
        }
        if !(self.entropy_coef >= 0.0 && self.value_coef >= 0.0) {
            p.push("ppo loss coefficients must be non-negative".to_string());
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            p.push(format!("ppo learning rate must be finite and non-negative, got {}", self.lr));
        }
        if self.epochs == 0 {
            p.push("ppo epochs must be positive".to_string());
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            p.push(format!("ppo gamma must be in [0, 1], got {}", self.gamma));
        }
        p
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PpoParams {
    pub policy: Mlp,
    pub value: Mlp,
    pub clip: f64,
    pub entropy_coef: f64,
    pub value_coef: f64,
    pub epochs: usize,
}

impl PpoParams {
    pub fn init(cfg: &PpoConfig, state_dim: usize, n_actions: usize, rng: &mut impl Rng) -> Self {
        let policy = Mlp::init(state_dim, cfg.hidden, n_actions, 0.01, rng);
        let value = Mlp::init(state_dim, cfg.hidden, 1, 1.0, rng);
        Self { policy, value, clip: cfg.clip, entropy_coef: cfg.entropy_coef, value_coef: cfg.value_coef, epochs: cfg.epochs }
    }

    pub fn n_actions(&self) -> usize {
        self.policy.b2.len()
    }

    pub fn state_dim(&self) -> usize {
        self.policy.w1.rows()
    }

    pub fn slices(&self) -> Vec<&[f64]> {
        let mut s = self.policy.slices();
        s.extend(self.value.slices());
        s
    }

    pub fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut s = self.policy.slices_mut();
        s.extend(self.value.slices_mut());
        s
    }

    /// Action log-probabilities for one state.
    pub fn log_probs(&self, state: &[f64]) -> Result<Vec<f64>, RlError> {
        let x = Matrix::from_vec(1, state.len(), state.to_vec())?;
        Ok(log_softmax(self.policy.forward(&x)?.output.row(0)))
    }

    pub fn value_of(&self, state: &[f64]) -> Result<f64, RlError> {
        let x = Matrix::from_vec(1, state.len(), state.to_vec())?;
        Ok(self.value.forward(&x)?.output.get(0, 0))
    }

    /// Samples an action; returns `(action, log π(action), V(state))`.
    pub fn act(&self, state: &[f64], rng: &mut impl Rng) -> Result<(usize, f64, f64), RlError> {
        let lp = self.log_probs(state)?;
        let dist = WeightedIndex::new(lp.iter().map(|l| l.exp())).expect("softmax weights are positive");
        let a = dist.sample(rng);
        Ok((a, lp[a], self.value_of(state)?))
    }
}

fn log_softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
    z.iter().map(|v| v - lse).collect()
}

/// One rollout. `returns` and `advantages` are filled by [`compute_advantages`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PpoTrajectory {
    pub states: Vec<Vec<f64>>,
    pub actions: Vec<usize>,
    pub log_probs: Vec<f64>,
    pub values: Vec<f64>,
    pub rewards: Vec<f64>,
    pub returns: Vec<f64>,
    pub advantages: Vec<f64>,
}

impl PpoTrajectory {
    pub fn push(&mut self, state: Vec<f64>, action: usize, log_prob: f64, value: f64, reward: f64) {
        self.states.push(state);
        self.actions.push(action);
        self.log_probs.push(log_prob);
        self.values.push(value);
        self.rewards.push(reward);
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    fn check(&self, with_advantages: bool) -> Result<(), RlError> {
        let n = self.len();
        if n == 0 {
            return Err(RlError::EmptyTrajectory);
        }
        let mut lens = vec![self.states.len(), self.log_probs.len(), self.values.len(), self.rewards.len()];
        if with_advantages {
            lens.extend([self.returns.len(), self.advantages.len()]);
        }
        if lens.iter().any(|&l| l != n) {
            return Err(RlError::LengthMismatch);
        }
        Ok(())
    }
}

/// Discounted returns computed backward from a zero bootstrap, then
/// `A_t = G_t − V_t`, centered and scaled to unit std. When the std is below
/// 1e-8 the advantages are only centered.
pub fn compute_advantages(mut traj: PpoTrajectory, gamma: f64) -> Result<PpoTrajectory, RlError> {
    traj.check(false)?;
    let n = traj.len();
    let mut returns = vec![0.0; n];
    let mut g = 0.0;
    for t in (0..n).rev() {
        g = traj.rewards[t] + gamma * g;
        returns[t] = g;
    }
    let raw: Vec<f64> = returns.iter().zip(&traj.values).map(|(r, v)| r - v).collect();
    let mean = raw.iter().sum::<f64>() / n as f64;
    let std = (raw.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    let advantages: Vec<f64> = if std < 1e-8 {
        raw.iter().map(|a| a - mean).collect()
    } else {
        raw.iter().map(|a| (a - mean) / std).collect()
    };
    if advantages.iter().any(|a| !a.is_finite()) {
        return Err(RlError::NonFiniteLoss(f64::NAN));
    }
    traj.returns = returns;
    traj.advantages = advantages;
    Ok(traj)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PpoLoss {
    /// `policy + value_coef·value − entropy_coef·entropy`.
    pub total: f64,
    /// Negated mean clipped surrogate.
    pub policy: f64,
    /// Mean squared error of the value head against the returns.
    pub value: f64,
    /// Mean policy entropy.
    pub entropy: f64,
}

/// Loss and exact gradient (same layout as `params`) on one trajectory.
pub fn ppo_loss_and_grad(params: &PpoParams, traj: &PpoTrajectory) -> Result<(PpoLoss, PpoParams), RlError> {
    traj.check(true)?;
    let n = traj.len();
    let nf = n as f64;
    let d = params.state_dim();
    let x = Matrix::from_fn(n, d, |i, j| traj.states[i][j]);

    let pc = params.policy.forward(&x)?;
    let vc = params.value.forward(&x)?;
    let n_actions = params.n_actions();
    let mut d_logits = Matrix::zeros(n, n_actions);
    let mut d_values = Matrix::zeros(n, 1);
    let (mut policy, mut value, mut entropy) = (0.0, 0.0, 0.0);
    let (lo, hi) = (1.0 - params.clip, 1.0 + params.clip);

    for t in 0..n {
        let a = traj.actions[t];
        if a >= n_actions {
            return Err(RlError::ActionOutOfRange { action: a, n_actions });
        }
        let lp = log_softmax(pc.output.row(t));
        let pi: Vec<f64> = lp.iter().map(|l| l.exp()).collect();
        let adv = traj.advantages[t];
        let ratio = (lp[a] - traj.log_probs[t]).exp();
        let unclipped = ratio * adv;
        let clipped = ratio.clamp(lo, hi) * adv;
        policy -= unclipped.min(clipped) / nf;
        // Only the unclipped branch depends on the parameters.
        let d_lp = if unclipped <= clipped { -unclipped / nf } else { 0.0 };

        let h: f64 = -pi.iter().zip(&lp).map(|(p, l)| p * l).sum::<f64>();
        entropy += h / nf;

        let row = d_logits.row_mut(t);
        for k in 0..n_actions {
            let onehot = if k == a { 1.0 } else { 0.0 };
            row[k] = d_lp * (onehot - pi[k]) + params.entropy_coef / nf * pi[k] * (lp[k] + h);
        }

        let err = vc.output.get(t, 0) - traj.returns[t];
        value += err * err / nf;
        d_values.set(t, 0, 2.0 * params.value_coef * err / nf);
    }

    let total = policy + params.value_coef * value - params.entropy_coef * entropy;
    if !total.is_finite() {
        return Err(RlError::NonFiniteLoss(total));
    }
    let grads = PpoParams {
        policy: params.policy.backward(&x, &pc, &d_logits)?,
        value: params.value.backward(&x, &vc, &d_values)?,
        ..params.clone()
    };
    Ok((PpoLoss { total, policy, value, entropy }, grads))
}

/// One plain gradient-descent step of size `lr`; returns the loss before the step.
pub fn ppo_update(params: &mut PpoParams, traj: &PpoTrajectory, lr: f64) -> Result<PpoLoss, RlError> {
    let (loss, grads) = ppo_loss_and_grad(params, traj)?;
    for (p, g) in params.slices_mut().into_iter().zip(grads.slices()) {
        for (p, g) in p.iter_mut().zip(g) {
            *p -= lr * g;
        }
    }
    Ok(loss)
}

/// PPO learner with an Adam optimizer and its own sampling stream.
#[derive(Debug, Clone)]
pub struct PpoAgent {
    pub params: PpoParams,
    pub cfg: PpoConfig,
    optimizer: Adam<f64>,
    rng: ChaCha8Rng,
}

impl PpoAgent {
    pub fn new(cfg: PpoConfig, state_dim: usize, n_actions: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = PpoParams::init(&cfg, state_dim, n_actions, &mut rng);
        Self { params, cfg, optimizer: Adam::new(cfg.lr), rng }
    }

    pub fn act(&mut self, state: &[f64]) -> Result<(usize, f64, f64), RlError> {
        self.params.act(state, &mut self.rng)
    }

    /// Computes advantages and runs `epochs` full-batch Adam steps. The
    /// reported loss is the mean over those steps.
    pub fn update(&mut self, traj: PpoTrajectory) -> Result<(PpoTrajectory, PpoLoss), RlError> {
        let traj = compute_advantages(traj, self.cfg.gamma)?;
        let mut mean = PpoLoss::default();
        let k = self.params.epochs.max(1) as f64;
        for _ in 0..self.params.epochs.max(1) {
            let (loss, grads) = ppo_loss_and_grad(&self.params, &traj)?;
            self.optimizer.step(self.params.slices_mut(), grads.slices());
            mean.total += loss.total / k;
            mean.policy += loss.policy / k;
            mean.value += loss.value / k;
            mean.entropy += loss.entropy / k;
        }
        Ok((traj, mean))
    }
}

/// CSV `epoch,ppo_loss,value_loss,entropy`.
pub fn write_ppo_trace_csv(losses: &[PpoLoss], out: impl Write) -> std::io::Result<()> {
    let mut w = crate::report::csv_writer(out);
    w.write_record(["epoch", "ppo_loss", "value_loss", "entropy"])?;
    for (e, l) in losses.iter().enumerate() {
        w.write_record([e.to_string(), l.total.to_string(), l.value.to_string(), l.entropy.to_string()])?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn traj(rewards: &[f64], values: &[f64]) -> PpoTrajectory {
        let mut t = PpoTrajectory::default();
        for (r, v) in rewards.iter().zip(values) {
            t.push(vec![0.0], 0, 0.0, *v, *r);
        }
        t
    }

    #[test]
    fn advantages_zero_when_values_match_returns() {
        let t = compute_advantages(traj(&[1.0, 2.0], &[2.0, 2.0]), 0.5).unwrap();
        assert_eq!(t.returns, vec![2.0, 2.0]);
        assert_eq!(t.advantages, vec![0.0, 0.0]);
    }

    #[test]
    fn constant_advantages_center_to_zero() {
        let t = compute_advantages(traj(&[1.0, 1.0], &[0.0, 0.0]), 0.0).unwrap();
        assert_eq!(t.returns, vec![1.0, 1.0]);
        assert_eq!(t.advantages, vec![0.0, 0.0]);
    }

    #[test]
    fn backward_recursion_by_hand() {
        // G2 = 2; G1 = 0 + 0.5·2 = 1; G0 = 1 + 0.5·1 = 1.5.
        let t = compute_advantages(traj(&[1.0, 0.0, 2.0], &[0.0; 3]), 0.5).unwrap();
        assert_eq!(t.returns, vec![1.5, 1.0, 2.0]);
        let mean = 1.5;
        let std = ((0.0f64 + 0.25 + 0.25) / 3.0).sqrt();
        let expected = [0.0, -0.5 / std, 0.5 / std];
        for (a, e) in t.advantages.iter().zip(expected) {
            assert!((a - e).abs() < 1e-12, "{a} vs {e} (mean {mean})");
        }
    }

    #[test]
    fn empty_and_mismatched_trajectories() {
        assert_eq!(compute_advantages(PpoTrajectory::default(), 0.9), Err(RlError::EmptyTrajectory));
        let mut t = traj(&[1.0], &[0.0]);
        t.values.push(1.0);
        assert_eq!(compute_advantages(t, 0.9), Err(RlError::LengthMismatch));
    }

    #[test]
    fn log_softmax_normalizes() {
        let lp = log_softmax(&[1000.0, 1001.0, 999.0]);
        let s: f64 = lp.iter().map(|l| l.exp()).sum();
        assert!((s - 1.0).abs() < 1e-12);
    }
}
