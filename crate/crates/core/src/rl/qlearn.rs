use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::RlError;

/// Dense tabular action values, zero-initialized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QTable {
    n_states: usize,
    n_actions: usize,
    values: Vec<f64>,
}

impl QTable {
    pub fn new(n_states: usize, n_actions: usize) -> Self {
        Self { n_states, n_actions, values: vec![0.0; n_states * n_actions] }
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    /// Out-of-range entries read as 0.
    pub fn get(&self, s: usize, a: usize) -> f64 {
        if s < self.n_states && a < self.n_actions {
            self.values[s * self.n_actions + a]
        } else {
            0.0
        }
    }

    pub fn set(&mut self, s: usize, a: usize, v: f64) {
        self.values[s * self.n_actions + a] = v;
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.values[s * self.n_actions..(s + 1) * self.n_actions]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max(&self, s: usize) -> f64 {
        self.row(s).iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Ties go to the lowest action id.
    pub fn argmax(&self, s: usize) -> usize {
        argmax_among(self, s, 0..self.n_actions).expect("at least one action")
    }

    pub fn greedy_policy(&self) -> Vec<usize> {
        (0..self.n_states).map(|s| self.argmax(s)).collect()
    }
}

fn argmax_among(q: &QTable, s: usize, actions: impl IntoIterator<Item = usize>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for a in actions {
        let v = q.get(s, a);
        match best {
            Some((b, bv)) if v < bv || (v == bv && a > b) => {}
            _ => best = Some((a, v)),
        }
    }
    best.map(|(a, _)| a)
}

/// Q-learning hyperparameters. `epsilon` and `alpha` are the initial values;
/// both decay multiplicatively once per episode down to their floors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RlHyper {
    pub alpha: f64,
    pub gamma: f64,
    pub epsilon: f64,
    pub epsilon_decay: f64,
    pub epsilon_floor: f64,
    pub alpha_decay: f64,
    pub alpha_floor: f64,
}

impl Default for RlHyper {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            gamma: 0.9,
            epsilon: 1.0,
            epsilon_decay: 0.99,
            epsilon_floor: 0.01,
            alpha_decay: 1.0,
            alpha_floor: 0.0,
        }
    }
}

impl RlHyper {
    /// Every violated range, not just the first.
    pub fn problems(&self) -> Vec<String> {
        let mut p = Vec::new();
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            p.push(format!("alpha must be in (0, 1], got {}", self.alpha));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            p.push(format!("gamma must be in [0, 1), got {}", self.gamma));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            p.push(format!("epsilon must be in [0, 1], got {}", self.epsilon));
        }
        if !(self.epsilon_decay > 0.0 && self.epsilon_decay <= 1.0) {
            p.push(format!("epsilon_decay must be in (0, 1], got {}", self.epsilon_decay));
        }
        if !(0.0..=self.epsilon.max(0.0)).contains(&self.epsilon_floor) {
            p.push(format!("epsilon_floor must be in [0, epsilon], got {}", self.epsilon_floor));
        }
        if !(self.alpha_decay > 0.0 && self.alpha_decay <= 1.0) {
            p.push(format!("alpha_decay must be in (0, 1], got {}", self.alpha_decay));
        }
        if !(0.0..=self.alpha.max(0.0)).contains(&self.alpha_floor) {
            p.push(format!("alpha_floor must be in [0, alpha], got {}", self.alpha_floor));
        }
        p
    }

    pub fn validate(&self) -> Result<(), RlError> {
        let p = self.problems();
        if p.is_empty() {
            Ok(())
        } else {
            Err(RlError::InvalidHyper(p.join("; ")))
        }
    }

    /// Exploration rate for episode `e` (0-based).
    pub fn epsilon_at(&self, e: usize) -> f64 {
        decayed(self.epsilon, self.epsilon_decay, self.epsilon_floor, e)
    }

    /// Learning rate for episode `e` (0-based).
    pub fn alpha_at(&self, e: usize) -> f64 {
        decayed(self.alpha, self.alpha_decay, self.alpha_floor, e)
    }
}

fn decayed(start: f64, decay: f64, floor: f64, e: usize) -> f64 {
    let mut v = start;
    for _ in 0..e {
        v = (v * decay).max(floor);
        if v == floor {
            break;
        }
    }
    v
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub state: usize,
    pub action: usize,
    pub reward: f64,
    pub next_state: usize,
    pub terminal: bool,
}

/// Applies `ΔQ = α(r + γ·max_a' Q(s', a') − Q(s, a))` and returns ΔQ.
/// Terminal transitions bootstrap from 0.
pub fn q_update(q: &mut QTable, t: &Transition, hp: &RlHyper) -> f64 {
    let next = if t.terminal { 0.0 } else { q.max(t.next_state) };
    let old = q.get(t.state, t.action);
    let delta = hp.alpha * (t.reward + hp.gamma * next - old);
    q.set(t.state, t.action, old + delta);
    delta
}

/// With probability `epsilon` a uniform pick from `actions`, otherwise the
/// greedy one (lowest id on ties).
pub fn epsilon_greedy(
    q: &QTable,
    s: usize,
    actions: &[usize],
    epsilon: f64,
    rng: &mut impl Rng,
) -> Result<usize, RlError> {
    if actions.is_empty() {
        return Err(RlError::EmptyActions);
    }
    if rng.random::<f64>() < epsilon {
        Ok(actions[rng.random_range(0..actions.len())])
    } else {
        Ok(argmax_among(q, s, actions.iter().copied()).expect("non-empty"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvStep<I> {
    pub next_state: usize,
    pub reward: f64,
    /// True end of the episode; no bootstrapping past it.
    pub terminal: bool,
    /// Episode cut short (horizon); the next state is still bootstrapped.
    pub truncated: bool,
    pub info: I,
}

/// A finite-state, finite-action episodic environment driven by the caller's RNG.
pub trait DiscreteEnv {
    type Info;

    fn n_states(&self) -> usize;
    fn n_actions(&self) -> usize;
    fn reset(&mut self, rng: &mut ChaCha8Rng) -> usize;
    fn step(&mut self, action: usize, rng: &mut ChaCha8Rng) -> EnvStep<Self::Info>;
}

/// What the per-step observer of [`train_q_agent_observed`] sees.
#[derive(Debug)]
pub struct StepRecord<'a, I> {
    pub episode: usize,
    pub step: usize,
    pub state: usize,
    pub action: usize,
    pub epsilon: f64,
    pub alpha: f64,
    pub outcome: &'a EnvStep<I>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QTrainResult {
    pub table: QTable,
    pub returns: Vec<f64>,
    pub epsilons: Vec<f64>,
    pub alphas: Vec<f64>,
}

impl QTrainResult {
    /// CSV `episode,return,epsilon`.
    pub fn write_trace_csv(&self, out: impl Write) -> std::io::Result<()> {
        let mut w = crate::report::csv_writer(out);
        w.write_record(["episode", "return", "epsilon"])?;
        for (e, (r, eps)) in self.returns.iter().zip(&self.epsilons).enumerate() {
            w.write_record([e.to_string(), r.to_string(), eps.to_string()])?;
        }
        w.flush()
    }
}

pub fn train_q_agent<E: DiscreteEnv>(
    env: &mut E,
    hp: &RlHyper,
    episodes: usize,
    seed: u64,
) -> Result<QTrainResult, RlError> {
    train_q_agent_observed(env, hp, episodes, seed, |_| {})
}

/// Runs `episodes` episodes of ε-greedy Q-learning. Episodes end when the
/// environment reports terminal or truncated. ε and α are held fixed within
/// an episode and decayed between episodes.
pub fn train_q_agent_observed<E: DiscreteEnv>(
    env: &mut E,
    hp: &RlHyper,
    episodes: usize,
    seed: u64,
    mut observe: impl FnMut(&StepRecord<'_, E::Info>),
) -> Result<QTrainResult, RlError> {
    hp.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut table = QTable::new(env.n_states(), env.n_actions());
    let actions: Vec<usize> = (0..env.n_actions()).collect();
    let mut returns = Vec::with_capacity(episodes);
    let mut epsilons = Vec::with_capacity(episodes);
    let mut alphas = Vec::with_capacity(episodes);
    let (mut epsilon, mut alpha) = (hp.epsilon, hp.alpha);

    for episode in 0..episodes {
        let step_hp = RlHyper { alpha, epsilon, ..*hp };
        let mut state = env.reset(&mut rng);
        let mut total = 0.0;
        let mut discount = 1.0;
        for step in 0.. {
            let action = epsilon_greedy(&table, state, &actions, epsilon, &mut rng)?;
            let outcome = env.step(action, &mut rng);
            if !outcome.reward.is_finite() {
                return Err(RlError::NonFiniteReward { episode, step, reward: outcome.reward });
            }
            let t = Transition {
                state,
                action,
                reward: outcome.reward,
                next_state: outcome.next_state,
                terminal: outcome.terminal,
            };
            q_update(&mut table, &t, &step_hp);
            total += discount * outcome.reward;
            discount *= hp.gamma;
            observe(&StepRecord { episode, step, state, action, epsilon, alpha, outcome: &outcome });
            state = outcome.next_state;
            if outcome.terminal || outcome.truncated {
                break;
            }
        }
        returns.push(total);
        epsilons.push(epsilon);
        alphas.push(alpha);
        epsilon = (epsilon * hp.epsilon_decay).max(hp.epsilon_floor);
        alpha = (alpha * hp.alpha_decay).max(hp.alpha_floor);
    }
    Ok(QTrainResult { table, returns, epsilons, alphas })
}
