use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use serde::Deserialize;
use serde_json::{json, Value};

use super::hex::Quantity;
use super::{BlockRange, BlockRecord, IngestError};

/// Environment variable consulted for the RPC endpoint when no flag is given.
pub const ENDPOINT_ENV: &str = "ETH_RPC_URL";

/// Bounded exponential backoff: delay before retry `k` (1-based) is
/// `base_delay * 2^(k-1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self { attempts: 5, base_delay: Duration::from_millis(250) }
    }
}

impl RetryPolicy {
    pub fn delay_before(&self, retry: u32) -> Duration {
        self.base_delay * 2u32.saturating_pow(retry.saturating_sub(1))
    }
}

#[derive(Deserialize)]
struct RpcResponse {
    #[serde(default)]
    result: Option<Value>,
    #[serde(default)]
    error: Option<RpcErrorObject>,
}

#[derive(Deserialize)]
struct RpcErrorObject {
    code: i64,
    message: String,
}

/// Blocking JSON-RPC 2.0 client over HTTP.
#[derive(Debug, Clone)]
pub struct RpcClient {
    endpoint: String,
    agent: ureq::Agent,
    retry: RetryPolicy,
}

impl RpcClient {
    pub fn new(endpoint: impl Into<String>) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(30)))
            .http_status_as_error(false)
            .build()
            .new_agent();
        Self { endpoint: endpoint.into(), agent, retry: RetryPolicy::default() }
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    fn call_once(&self, body: &str) -> Result<Value, IngestError> {
        let transport = |message: String| IngestError::Transport { attempts: 1, message };
        let mut resp = self
            .agent
            .post(&self.endpoint)
            .header("Content-Type", "application/json")
            .send(body)
            .map_err(|e| transport(e.to_string()))?;
        let status = resp.status().as_u16();
        if status == 429 || status >= 500 {
            return Err(transport(format!("HTTP {status}")));
        }
        let text = resp.body_mut().read_to_string().map_err(|e| transport(e.to_string()))?;
        if status != 200 {
            return Err(IngestError::Protocol { code: status as i64, message: format!("HTTP {status}: {text}") });
        }
        let parsed: RpcResponse = serde_json::from_str(&text)
            .map_err(|e| IngestError::Parse(format!("malformed JSON-RPC envelope: {e}")))?;
        if let Some(err) = parsed.error {
            return Err(IngestError::Protocol { code: err.code, message: err.message });
        }
        Ok(parsed.result.unwrap_or(Value::Null))
    }

    /// Issues one call, retrying transport failures only.
    pub fn call(&self, method: &str, params: Value) -> Result<Value, IngestError> {
        let body = json!({ "jsonrpc": "2.0", "id": 1, "method": method, "params": params }).to_string();
        let attempts = self.retry.attempts.max(1);
        let mut last = String::new();
        for attempt in 1..=attempts {
            if attempt > 1 {
                thread::sleep(self.retry.delay_before(attempt - 1));
            }
            match self.call_once(&body) {
                Err(IngestError::Transport { message, .. }) => last = message,
                other => return other,
            }
        }
        Err(IngestError::Transport { attempts, message: last })
    }

    pub fn block_number(&self) -> Result<u64, IngestError> {
        let v = self.call("eth_blockNumber", json!([]))?;
        let s = v.as_str().ok_or_else(|| IngestError::Parse(format!("eth_blockNumber returned {v}")))?;
        u64::parse_quantity(s).map_err(|e| IngestError::Parse(e.to_string()))
    }

    /// `eth_getBlockByNumber(number, true)`.
    pub fn fetch_block(&self, number: u64) -> Result<BlockRecord, IngestError> {
        let v = self.call("eth_getBlockByNumber", json!([number.to_quantity(), true]))?;
        if v.is_null() {
            return Err(IngestError::Protocol { code: 0, message: format!("block {number} not found") });
        }
        parse_block(v)
    }
}

pub(crate) fn parse_block(v: Value) -> Result<BlockRecord, IngestError> {
    let block: BlockRecord = serde_json::from_value(v).map_err(|e| IngestError::Parse(e.to_string()))?;
    block.check().map_err(IngestError::Parse)?;
    Ok(block)
}

/// Fetches a single block with the default retry policy.
pub fn fetch_block(endpoint: &str, number: u64) -> Result<BlockRecord, IngestError> {
    RpcClient::new(endpoint).fetch_block(number)
}

/// Fetches every block in `range` with at most `parallelism` requests in flight.
///
/// The result is ascending by number. If any block fails, the error carries
/// the lowest failing block number.
pub fn fetch_range(
    client: &RpcClient,
    range: BlockRange,
    parallelism: usize,
) -> Result<Vec<BlockRecord>, IngestError> {
    if parallelism == 0 {
        return Err(IngestError::ZeroParallelism);
    }
    let total = range.len();
    let next = AtomicU64::new(0);
    let results: Mutex<Vec<(u64, Result<BlockRecord, IngestError>)>> = Mutex::new(Vec::new());
    let workers = (parallelism as u64).min(total) as usize;

    thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let offset = next.fetch_add(1, Ordering::Relaxed);
                if offset >= total {
                    break;
                }
                let number = range.start_block() + offset;
                let res = client.fetch_block(number);
                results.lock().expect("results lock").push((number, res));
            });
        }
    });

    let mut results = results.into_inner().expect("results lock");
    results.sort_by_key(|(n, _)| *n);
    let mut blocks = Vec::with_capacity(results.len());
    for (number, res) in results {
        match res {
            Ok(b) => blocks.push(b),
            Err(e) => return Err(IngestError::Block { number, source: Box::new(e) }),
        }
    }
    Ok(blocks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backoff_schedule() {
        let p = RetryPolicy::default();
        let delays: Vec<_> = (1..p.attempts).map(|k| p.delay_before(k).as_millis()).collect();
        assert_eq!(delays, vec![250, 500, 1000, 2000]);
    }

    #[test]
    fn parse_empty_block() {
        let v = json!({
            "number": "0x5", "timestamp": "0x0", "gasLimit": "0x1c9c380",
            "gasUsed": "0x0", "transactions": [], "miner": "0x0000000000000000000000000000000000000000"
        });
        let b = parse_block(v).unwrap();
        assert_eq!(b.number, 5);
        assert_eq!(b.gas_limit, 30_000_000);
        assert!(b.transactions.is_empty());
    }

    #[test]
    fn malformed_hex_is_parse_error() {
        let v = json!({ "number": "5", "timestamp": "0x0", "gasLimit": "0x1", "gasUsed": "0x0", "transactions": [] });
        assert!(matches!(parse_block(v), Err(IngestError::Parse(_))));
    }

    #[test]
    fn unreachable_endpoint_is_transport_error() {
        let client = RpcClient::new("http://127.0.0.1:1")
            .with_retry(RetryPolicy { attempts: 2, base_delay: Duration::from_millis(1) });
        match client.fetch_block(1) {
            Err(IngestError::Transport { attempts, .. }) => assert_eq!(attempts, 2),
            other => panic!("expected transport error, got {other:?}"),
        }
    }
}
