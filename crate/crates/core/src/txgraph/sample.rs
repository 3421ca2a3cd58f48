use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::SparseAdjacency;
use crate::scalar::Scalar;

/// GraphSAGE neighbor sampling settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub k: usize,
    pub seed: u64,
}

impl SamplerConfig {
    pub fn new(k: usize, seed: u64) -> Option<Self> {
        (k >= 1).then_some(Self { k, seed })
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Per-(seed, node, epoch) RNG stream.
pub fn sampler_rng(seed: u64, node: usize, epoch: u64) -> ChaCha8Rng {
    let h = splitmix64(splitmix64(splitmix64(seed) ^ node as u64) ^ epoch);
    ChaCha8Rng::seed_from_u64(h)
}

/// Uniformly samples `min(k, deg(i))` distinct neighbors of `i`, returned ascending.
pub fn sample_neighbors<T: Scalar>(
    adj: &SparseAdjacency<T>,
    i: usize,
    cfg: &SamplerConfig,
    epoch: u64,
) -> Vec<usize> {
    let nbrs = adj.neighbors(i);
    if cfg.k >= nbrs.len() {
        return nbrs.to_vec();
    }
    let mut rng = sampler_rng(cfg.seed, i, epoch);
    let mut picked: Vec<usize> =
        rand::seq::index::sample(&mut rng, nbrs.len(), cfg.k).into_iter().map(|p| nbrs[p]).collect();
    picked.sort_unstable();
    picked
}

#[cfg(test)]
mod tests {
    use super::*;

    fn star(deg: usize) -> SparseAdjacency<f64> {
        let t: Vec<_> = (1..=deg).map(|j| (0, j, 1.0)).collect();
        SparseAdjacency::from_coo(deg + 1, &t).unwrap()
    }

    #[test]
    fn isolated_node_gets_nothing() {
        let a = star(3);
        assert!(sample_neighbors(&a, 2, &SamplerConfig { k: 2, seed: 1 }, 0).is_empty());
    }

    #[test]
    fn large_k_returns_all() {
        let a = star(4);
        assert_eq!(sample_neighbors(&a, 0, &SamplerConfig { k: 4, seed: 1 }, 0), vec![1, 2, 3, 4]);
        assert_eq!(sample_neighbors(&a, 0, &SamplerConfig { k: 9, seed: 1 }, 3), vec![1, 2, 3, 4]);
    }

    #[test]
    fn deterministic_subset() {
        let a = star(6);
        let cfg = SamplerConfig { k: 3, seed: 17 };
        let s = sample_neighbors(&a, 0, &cfg, 5);
        assert_eq!(s.len(), 3);
        assert!(s.windows(2).all(|w| w[0] < w[1]));
        assert!(s.iter().all(|j| (1..=6).contains(j)));
        assert_eq!(s, sample_neighbors(&a, 0, &cfg, 5));
    }

    #[test]
    fn zero_k_rejected() {
        assert!(SamplerConfig::new(0, 1).is_none());
    }
}
