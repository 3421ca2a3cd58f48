//! Block ingestion: JSON-RPC fetching, the NDJSON block cache, and a seeded
//! synthetic block generator for offline work.

mod cache;
pub mod hex;
mod rpc;
mod synth;

use ruint::aliases::U256;
use serde::{Deserialize, Serialize};

pub use self::cache::{cache_read, cache_write, encode_block};
pub use self::hex::{Address, HexError, Quantity, TxHash};
pub use self::rpc::{fetch_block, fetch_range, RetryPolicy, RpcClient, ENDPOINT_ENV};
pub use self::synth::{synth_blocks, synth_address, SynthConfig, TxCountDist};

/// One transaction as needed for graph construction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TxRecord {
    pub hash: TxHash,
    pub from: Address,
    /// `None` for contract creation.
    pub to: Option<Address>,
    #[serde(with = "hex::quantity")]
    pub value: U256,
    #[serde(with = "hex::quantity")]
    pub gas: u64,
    #[serde(with = "hex::quantity")]
    pub gas_price: u128,
}

impl TxRecord {
    pub fn is_contract_creation(&self) -> bool {
        self.to.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BlockRecord {
    #[serde(with = "hex::quantity")]
    pub number: u64,
    #[serde(with = "hex::quantity")]
    pub timestamp: u64,
    #[serde(with = "hex::quantity")]
    pub gas_limit: u64,
    #[serde(with = "hex::quantity")]
    pub gas_used: u64,
    pub transactions: Vec<TxRecord>,
}

impl BlockRecord {
    pub(crate) fn check(&self) -> Result<(), String> {
        if self.gas_used > self.gas_limit {
            return Err(format!(
                "block {}: gasUsed {} exceeds gasLimit {}",
                self.number, self.gas_used, self.gas_limit
            ));
        }
        Ok(())
    }
}

/// Inclusive block interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockRange {
    start_block: u64,
    end_block: u64,
}

impl BlockRange {
    pub fn new(start_block: u64, end_block: u64) -> Result<Self, IngestError> {
        if start_block > end_block {
            return Err(IngestError::InvalidRange { start_block, end_block });
        }
        Ok(Self { start_block, end_block })
    }

    pub fn start_block(&self) -> u64 {
        self.start_block
    }

    pub fn end_block(&self) -> u64 {
        self.end_block
    }

    pub fn len(&self) -> u64 {
        self.end_block - self.start_block + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn iter(&self) -> std::ops::RangeInclusive<u64> {
        self.start_block..=self.end_block
    }
}

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("transport error after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("rpc error {code}: {message}")]
    Protocol { code: i64, message: String },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("block {number} failed: {source}")]
    Block {
        number: u64,
        #[source]
        source: Box<IngestError>,
    },
    #[error("cache line {line}: {message}")]
    CacheLine { line: usize, message: String },
    #[error("invalid block range: start {start_block} > end {end_block}")]
    InvalidRange { start_block: u64, end_block: u64 },
    #[error("parallelism must be at least 1")]
    ZeroParallelism,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl IngestError {
    /// Whether a retry could plausibly succeed.
    pub fn is_transient(&self) -> bool {
        matches!(self, IngestError::Transport { .. })
    }

    /// Block number attached to a range failure, if any.
    pub fn block_number(&self) -> Option<u64> {
        match self {
            IngestError::Block { number, .. } => Some(*number),
            _ => None,
        }
    }
}
