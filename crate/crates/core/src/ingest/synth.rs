//! Seeded synthetic block streams.
//!
//! Generation procedure, for a seed `s` and config `c`:
//!
//! 1. `rng = ChaCha8Rng::seed_from_u64(s)`.
//! 2. Address `k` in `0..c.pool_size` is 20 bytes: byte 0 is `0xaa`, bytes
//!    12..20 are `(k + 1)` big-endian, the rest zero. Address `k` is picked
//!    with probability proportional to `1 / (k + 1)^c.zipf_exponent`, by
//!    drawing `u = rng.random::<f64>()` and taking the first `k` whose
//!    cumulative normalized weight exceeds `u` (last index if none does).
//! 3. For block `b` in `0..n_blocks`: the transaction count is `n` for
//!    `Fixed(n)`, or `rng.random_range(min..=max)` for `Uniform`. Then per
//!    transaction, in order: pick `from`, pick `to`, draw
//!    `value = rng.random::<u64>() >> 1` wei, draw
//!    `gas_price = rng.random_range(1..=200)` gwei, and, only when
//!    `c.creation_prob > 0`, draw `u = rng.random::<f64>()` and drop `to`
//!    when `u < c.creation_prob`.
//! 4. `gas = c.gas_per_tx`; the tx hash is `number` (8 bytes BE), the tx index
//!    (8 bytes BE), `s` (8 bytes BE), then 8 zero bytes.
//! 5. `number = c.start_block + b`, `timestamp = c.start_timestamp + b * c.block_interval`,
//!    `gas_used = Σ gas`, `gas_limit = max(c.gas_limit, gas_used)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ruint::aliases::U256;

use super::{Address, BlockRecord, TxHash, TxRecord};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TxCountDist {
    Fixed(usize),
    /// Inclusive bounds.
    Uniform { min: usize, max: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub pool_size: usize,
    pub zipf_exponent: f64,
    pub txs_per_block: TxCountDist,
    pub creation_prob: f64,
    pub gas_per_tx: u64,
    pub gas_limit: u64,
    pub start_block: u64,
    pub start_timestamp: u64,
    pub block_interval: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            pool_size: 64,
            zipf_exponent: 1.0,
            txs_per_block: TxCountDist::Uniform { min: 5, max: 15 },
            creation_prob: 0.0,
            gas_per_tx: 21_000,
            gas_limit: 30_000_000,
            start_block: 1,
            start_timestamp: 1_700_000_000,
            block_interval: 12,
        }
    }
}

/// Address number `k` of the synthetic pool.
pub fn synth_address(k: usize) -> Address {
    let mut bytes = [0u8; 20];
    bytes[0] = 0xaa;
    bytes[12..].copy_from_slice(&(k as u64 + 1).to_be_bytes());
    Address::from_bytes(bytes)
}

struct AddressPicker {
    cdf: Vec<f64>,
}

impl AddressPicker {
    fn new(pool_size: usize, exponent: f64) -> Self {
        let weights: Vec<f64> = (0..pool_size.max(1)).map(|k| 1.0 / ((k + 1) as f64).powf(exponent)).collect();
        let total: f64 = weights.iter().sum();
        let mut acc = 0.0;
        let cdf = weights
            .iter()
            .map(|w| {
                acc += w / total;
                acc
            })
            .collect();
        Self { cdf }
    }

    fn pick(&self, rng: &mut impl Rng) -> usize {
        let u: f64 = rng.random();
        self.cdf.iter().position(|&c| c > u).unwrap_or(self.cdf.len() - 1)
    }
}

/// Deterministic block list; see the module docs for the exact procedure.
pub fn synth_blocks(seed: u64, n_blocks: usize, cfg: &SynthConfig) -> Vec<BlockRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picker = AddressPicker::new(cfg.pool_size, cfg.zipf_exponent);
    let mut blocks = Vec::with_capacity(n_blocks);
    for b in 0..n_blocks as u64 {
        let number = cfg.start_block + b;
        let count = match cfg.txs_per_block {
            TxCountDist::Fixed(n) => n,
            TxCountDist::Uniform { min, max } => rng.random_range(min..=max.max(min)),
        };
        let mut transactions = Vec::with_capacity(count);
        for idx in 0..count as u64 {
            let from = synth_address(picker.pick(&mut rng));
            let mut to = Some(synth_address(picker.pick(&mut rng)));
            let value = U256::from(rng.random::<u64>() >> 1);
            let gas_price = rng.random_range(1u128..=200) * 1_000_000_000;
            if cfg.creation_prob > 0.0 && rng.random::<f64>() < cfg.creation_prob {
                to = None;
            }
            let mut hash = [0u8; 32];
            hash[..8].copy_from_slice(&number.to_be_bytes());
            hash[8..16].copy_from_slice(&idx.to_be_bytes());
            hash[16..24].copy_from_slice(&seed.to_be_bytes());
            transactions.push(TxRecord {
                hash: TxHash::from_bytes(hash),
                from,
                to,
                value,
                gas: cfg.gas_per_tx,
                gas_price,
            });
        }
        let gas_used = cfg.gas_per_tx * count as u64;
        blocks.push(BlockRecord {
            number,
            timestamp: cfg.start_timestamp + b * cfg.block_interval,
            gas_limit: cfg.gas_limit.max(gas_used),
            gas_used,
            transactions,
        });
    }
    blocks
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_per_seed() {
        let c = SynthConfig::default();
        assert_eq!(synth_blocks(1, 1, &c), synth_blocks(1, 1, &c));
        assert_ne!(synth_blocks(1, 3, &c), synth_blocks(2, 3, &c));
    }

    #[test]
    fn pool_of_one_gives_self_loops() {
        let c = SynthConfig { pool_size: 1, ..Default::default() };
        for b in synth_blocks(9, 4, &c) {
            for tx in &b.transactions {
                assert_eq!(Some(tx.from), tx.to);
            }
        }
    }

    #[test]
    fn gas_used_is_sum_of_tx_gas() {
        for b in synth_blocks(5, 10, &SynthConfig::default()) {
            let sum: u64 = b.transactions.iter().map(|t| t.gas).sum();
            assert_eq!(b.gas_used, sum);
            assert!(b.gas_used <= b.gas_limit);
        }
    }

    #[test]
    fn hubs_exist() {
        let c = SynthConfig { txs_per_block: TxCountDist::Fixed(50), ..Default::default() };
        let blocks = synth_blocks(11, 20, &c);
        let hub = synth_address(0);
        let tail = synth_address(63);
        let count = |a| blocks.iter().flat_map(|b| &b.transactions).filter(|t| t.from == a).count();
        assert!(count(hub) > 5 * count(tail).max(1));
    }

    #[test]
    fn creation_transactions_drop_to() {
        let c = SynthConfig { creation_prob: 1.0, ..Default::default() };
        let blocks = synth_blocks(2, 2, &c);
        assert!(blocks.iter().flat_map(|b| &b.transactions).all(|t| t.to.is_none()));
    }
}
