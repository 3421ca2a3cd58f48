use ethgnn::rl::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Deterministic tabular MDP with optional absorbing terminal state.
pub struct TableMdp {
    pub next: Vec<Vec<usize>>,
    pub reward: Vec<Vec<f64>>,
    pub terminal: Option<usize>,
    pub start: Option<usize>,
    pub horizon: usize,
    pub state: usize,
    pub t: usize,
}

impl DiscreteEnv for TableMdp {
    type Info = ();

    fn n_states(&self) -> usize {
        self.next.len()
    }

    fn n_actions(&self) -> usize {
        self.next[0].len()
    }

    fn reset(&mut self, rng: &mut ChaCha8Rng) -> usize {
        self.t = 0;
        self.state = match self.start {
            Some(s) => s,
            None => loop {
                let s = rng.random_range(0..self.next.len());
                if Some(s) != self.terminal {
                    break s;
                }
            },
        };
        self.state
    }

    fn step(&mut self, action: usize, _rng: &mut ChaCha8Rng) -> EnvStep<()> {
        let (s, a) = (self.state, action);
        self.state = self.next[s][a];
        self.t += 1;
        EnvStep {
            next_state: self.state,
            reward: self.reward[s][a],
            terminal: Some(self.state) == self.terminal,
            truncated: self.t >= self.horizon,
            info: (),
        }
    }
}

pub fn q_rows(q: &QTable) -> Vec<Vec<f64>> {
    (0..q.n_states()).map(|s| q.row(s).to_vec()).collect()
}

pub fn max_q_err(q: &QTable, oracle: &[Vec<f64>]) -> f64 {
    q_rows(q).iter().flatten().zip(oracle.iter().flatten()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}
