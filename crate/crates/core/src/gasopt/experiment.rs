use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{GasAction, GasEnv, GasEnvConfig, GasError};
use crate::rl::{train_q_agent_observed, QTable, RlHyper};

/// Everything `run_gas_rl_experiment` needs, with the desk-scale defaults.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GasExperimentConfig {
    pub env: GasEnvConfig,
    pub hp: RlHyper,
    pub episodes: usize,
    pub blocks_per_episode: usize,
    pub seed: u64,
}

impl Default for GasExperimentConfig {
    fn default() -> Self {
        Self {
            env: GasEnvConfig::default(),
            hp: RlHyper {
                alpha: 0.3,
                gamma: 0.9,
                epsilon: 1.0,
                epsilon_decay: 0.99,
                epsilon_floor: 0.01,
                alpha_decay: 0.995,
                alpha_floor: 0.05,
            },
            episodes: 1000,
            blocks_per_episode: 64,
            seed: 0,
        }
    }
}

impl GasExperimentConfig {
    pub fn problems(&self) -> Vec<String> {
        let mut p = self.env.problems();
        p.extend(self.hp.problems());
        if self.blocks_per_episode == 0 {
            p.push("blocks_per_episode must be positive".into());
        }
        p
    }

    pub fn run(&self) -> Result<GasExperiment, GasError> {
        run_gas_rl_experiment(&self.env, &self.hp, self.episodes, self.blocks_per_episode, self.seed)
    }
}

/// One simulated block of the experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockTrace {
    pub block: usize,
    pub episode: usize,
    pub gas_limit: u64,
    pub throughput: usize,
    pub epsilon: f64,
    pub learning_rate: f64,
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GasExperiment {
    pub blocks: Vec<BlockTrace>,
    pub returns: Vec<f64>,
    pub epsilons: Vec<f64>,
    pub learning_rates: Vec<f64>,
    pub table: QTable,
}

/// Mean and population variance.
fn moments(xs: impl Iterator<Item = f64>) -> (f64, f64) {
    let v: Vec<f64> = xs.collect();
    if v.is_empty() {
        return (0.0, 0.0);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    (mean, v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n)
}

impl GasExperiment {
    fn quartile(&self, q: usize) -> &[BlockTrace] {
        let n = self.blocks.len();
        &self.blocks[q * n / 4..(q + 1) * n / 4]
    }

    /// `(mean, variance)` of per-block throughput over quartile `q` in `0..4`.
    pub fn throughput_moments(&self, q: usize) -> (f64, f64) {
        moments(self.quartile(q).iter().map(|b| b.throughput as f64))
    }

    /// Average gas limit per block index within an episode, over all episodes.
    pub fn mean_gas_limit_by_block(&self) -> Vec<f64> {
        let mut sums: Vec<(f64, usize)> = Vec::new();
        let mut start = 0;
        for (i, b) in self.blocks.iter().enumerate() {
            if i > 0 && b.episode != self.blocks[i - 1].episode {
                start = i;
            }
            let k = i - start;
            if sums.len() <= k {
                sums.resize(k + 1, (0.0, 0));
            }
            sums[k].0 += b.gas_limit as f64;
            sums[k].1 += 1;
        }
        sums.into_iter().map(|(s, n)| s / n as f64).collect()
    }

    /// CSV `block,episode,gas_limit,throughput,epsilon,learning_rate,reward`.
    pub fn write_csv(&self, out: impl Write) -> std::io::Result<()> {
        let mut w = crate::report::csv_writer(out);
        w.write_record(["block", "episode", "gas_limit", "throughput", "epsilon", "learning_rate", "reward"])?;
        for b in &self.blocks {
            w.write_record([
                b.block.to_string(),
                b.episode.to_string(),
                b.gas_limit.to_string(),
                b.throughput.to_string(),
                b.epsilon.to_string(),
                b.learning_rate.to_string(),
                b.reward.to_string(),
            ])?;
        }
        w.flush()
    }
}

/// Trains a tabular agent on the gas simulator and records every block.
/// `blocks_per_episode` overrides the configured horizon.
pub fn run_gas_rl_experiment(
    env_cfg: &GasEnvConfig,
    hp: &RlHyper,
    episodes: usize,
    blocks_per_episode: usize,
    seed: u64,
) -> Result<GasExperiment, GasError> {
    let cfg = GasEnvConfig { horizon: blocks_per_episode, ..*env_cfg };
    let mut env = GasEnv::new(cfg)?;
    let mut blocks = Vec::with_capacity(episodes * blocks_per_episode);
    let result = train_q_agent_observed(&mut env, hp, episodes, seed, |r| {
        blocks.push(BlockTrace {
            block: blocks.len(),
            episode: r.episode,
            gas_limit: r.outcome.info.gas_limit,
            throughput: r.outcome.info.txs_included,
            epsilon: r.epsilon,
            learning_rate: r.alpha,
            reward: r.outcome.reward,
        });
    })?;
    Ok(GasExperiment {
        blocks,
        returns: result.returns,
        epsilons: result.epsilons,
        learning_rates: result.alphas,
        table: result.table,
    })
}

/// Mean throughput of the greedy policy over `episodes` fresh episodes.
pub fn greedy_throughput(env_cfg: &GasEnvConfig, table: &QTable, episodes: usize, seed: u64) -> Result<f64, GasError> {
    let mut env = GasEnv::new(*env_cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut total, mut count) = (0.0, 0usize);
    for _ in 0..episodes {
        let mut s = env.reset_with(&mut rng);
        for _ in 0..env_cfg.horizon {
            let a = GasAction::from_index(table.argmax(s.id)).expect("three actions");
            let (next, o) = env.env_step(a, &mut rng);
            total += o.txs_included as f64;
            count += 1;
            s = next;
        }
    }
    Ok(if count == 0 { 0.0 } else { total / count as f64 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_episodes() {
        let e = run_gas_rl_experiment(&GasEnvConfig::default(), &RlHyper::default(), 0, 64, 1).unwrap();
        assert!(e.blocks.is_empty() && e.epsilons.is_empty());
    }

    #[test]
    fn per_block_gas_average() {
        let e = run_gas_rl_experiment(&GasEnvConfig::default(), &RlHyper::default(), 3, 5, 2).unwrap();
        assert_eq!(e.blocks.len(), 15);
        let avg = e.mean_gas_limit_by_block();
        assert_eq!(avg.len(), 5);
        let direct: f64 = (0..3).map(|ep| e.blocks[ep * 5 + 2].gas_limit as f64).sum::<f64>() / 3.0;
        assert_eq!(avg[2], direct);
    }
}
