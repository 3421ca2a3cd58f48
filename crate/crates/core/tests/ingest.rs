mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::time::Duration;

use common::fixture::*;
use common::server::{requested_block, rpc_result, FixtureServer};
use ethgnn::ingest::*;
use ethgnn::txgraph::{build_transaction_graph, GraphOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

fn fast_retry() -> RetryPolicy {
    RetryPolicy { attempts: 5, base_delay: Duration::from_millis(1) }
}

#[test]
fn recorded_fixture_matches_hand_decoding() {
    let result = fixture_result();
    let server = FixtureServer::start(move |req| {
        assert_eq!(req["method"], "eth_getBlockByNumber");
        assert_eq!(req["params"], json!(["0x112a880", true]));
        rpc_result(&result)
    });
    let block = RpcClient::new(&server.url).fetch_block(18_000_000).unwrap();
    assert_eq!(block, fixture_oracle());
    assert!(block.transactions[1].is_contract_creation());
}

#[test]
fn empty_block_and_zero_quantities() {
    let server = FixtureServer::start(|req| {
        rpc_result(&json!({
            "number": req["params"][0], "timestamp": "0x0", "gasLimit": "0x0", "gasUsed": "0x0", "transactions": []
        }))
    });
    let block = fetch_block(&server.url, 9).unwrap();
    assert_eq!(block.number, 9);
    assert_eq!(block.timestamp, 0);
    assert!(block.transactions.is_empty());
}

fn synth_server(n_blocks: usize, delay: Duration) -> FixtureServer {
    let blocks = synth_blocks(3, n_blocks, &SynthConfig { start_block: 0, ..Default::default() });
    FixtureServer::start(move |req| {
        std::thread::sleep(delay);
        let n = requested_block(req) as usize;
        match blocks.get(n) {
            Some(b) => rpc_result(&serde_json::to_value(b).unwrap()),
            None => rpc_result(&Value::Null),
        }
    })
}

#[test]
fn range_is_ordered() {
    let server = synth_server(10, Duration::ZERO);
    let client = RpcClient::new(&server.url);
    let blocks = fetch_range(&client, BlockRange::new(3, 7).unwrap(), 3).unwrap();
    assert_eq!(blocks.iter().map(|b| b.number).collect::<Vec<_>>(), vec![3, 4, 5, 6, 7]);
    assert_eq!(fetch_range(&client, BlockRange::new(5, 5).unwrap(), 2).unwrap().len(), 1);
}

#[test]
fn parallel_fetch_equals_sequential() {
    let server = synth_server(20, Duration::from_millis(5));
    let client = RpcClient::new(&server.url);
    let range = BlockRange::new(0, 19).unwrap();
    let sequential = fetch_range(&client, range, 1).unwrap();
    assert_eq!(server.peak(), 1);
    let parallel = fetch_range(&client, range, 4).unwrap();
    assert_eq!(parallel, sequential);
    assert!(server.peak() <= 4);
    assert_eq!(sequential, synth_blocks(3, 20, &SynthConfig { start_block: 0, ..Default::default() }));
}

#[test]
fn range_failure_names_the_block() {
    let server = synth_server(10, Duration::ZERO);
    let client = RpcClient::new(&server.url).with_retry(fast_retry());
    let err = fetch_range(&client, BlockRange::new(8, 12).unwrap(), 2).unwrap_err();
    assert_eq!(err.block_number(), Some(10));
    assert!(matches!(fetch_range(&client, BlockRange::new(0, 1).unwrap(), 0), Err(IngestError::ZeroParallelism)));
    assert!(BlockRange::new(4, 3).is_err());
}

#[test]
fn transient_failures_are_retried() {
    let result = fixture_result();
    let calls = std::sync::atomic::AtomicUsize::new(0);
    let server = FixtureServer::start(move |_| {
        if calls.fetch_add(1, std::sync::atomic::Ordering::SeqCst) < 2 {
            (503, "busy".into())
        } else {
            rpc_result(&result)
        }
    });
    let block = RpcClient::new(&server.url).with_retry(fast_retry()).fetch_block(18_000_000).unwrap();
    assert_eq!(block, fixture_oracle());
    assert_eq!(server.hits(), 3);
}

#[test]
fn error_kinds_are_distinguishable() {
    let always_busy = FixtureServer::start(|_| (503, String::new()));
    let err = RpcClient::new(&always_busy.url).with_retry(fast_retry()).fetch_block(1).unwrap_err();
    assert!(matches!(err, IngestError::Transport { attempts: 5, .. }), "{err}");
    assert_eq!(always_busy.hits(), 5);

    let closed = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}", closed.local_addr().unwrap());
    drop(closed);
    let err = RpcClient::new(url).with_retry(fast_retry()).fetch_block(1).unwrap_err();
    assert!(err.is_transient(), "{err}");

    let rpc_error = FixtureServer::start(|_| {
        (200, json!({"jsonrpc": "2.0", "id": 1, "error": {"code": -32000, "message": "header not found"}}).to_string())
    });
    let err = RpcClient::new(&rpc_error.url).fetch_block(1).unwrap_err();
    assert!(matches!(err, IngestError::Protocol { code: -32000, .. }), "{err}");
    assert_eq!(rpc_error.hits(), 1);

    let mut bad = fixture_result();
    bad["transactions"][0]["value"] = json!("0x12g4");
    let malformed = FixtureServer::start(move |_| rpc_result(&bad));
    let err = RpcClient::new(&malformed.url).fetch_block(1).unwrap_err();
    assert!(matches!(err, IngestError::Parse(_)), "{err}");
}

#[test]
fn head_block_number() {
    let server = FixtureServer::start(|req| {
        assert_eq!(req["method"], "eth_blockNumber");
        rpc_result(&json!("0x112a880"))
    });
    assert_eq!(RpcClient::new(&server.url).block_number().unwrap(), 18_000_000);
}

#[test]
fn cache_round_trip_is_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    let blocks = synth_blocks(11, 100, &SynthConfig { creation_prob: 0.1, ..Default::default() });
    let first = dir.path().join("a.ndjson");
    let second = dir.path().join("b.ndjson");
    cache_write(&first, &blocks).unwrap();
    let read = cache_read(&first).unwrap();
    assert_eq!(read, blocks);
    cache_write(&second, &read).unwrap();
    let (a, b) = (std::fs::read(&first).unwrap(), std::fs::read(&second).unwrap());
    assert_eq!(a, b);
    assert_eq!(a.iter().filter(|&&c| c == b'\n').count(), 100);
}

#[test]
fn fixture_cache_line_equals_wire_encoding() {
    let block = fixture_oracle();
    let line: Value = serde_json::from_str(&encode_block(&block)).unwrap();
    let wire = fixture_result();
    for key in ["number", "timestamp", "gasLimit", "gasUsed"] {
        assert_eq!(line[key], wire[key]);
    }
    for (ours, theirs) in line["transactions"].as_array().unwrap().iter().zip(wire["transactions"].as_array().unwrap()) {
        for key in ["hash", "value", "gas", "gasPrice"] {
            assert_eq!(ours[key], theirs[key]);
        }
        for key in ["from", "to"] {
            assert_eq!(ours[key].as_str().map(str::to_lowercase), theirs[key].as_str().map(str::to_lowercase));
        }
    }
}

#[test]
fn corrupt_cache_line_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("c.ndjson");
    let good = encode_block(&synth_blocks(1, 1, &SynthConfig::default())[0]);
    std::fs::write(&p, format!("{good}\n{good}\n{{\"number\": 12\n")).unwrap();
    match cache_read(&p).unwrap_err() {
        IngestError::CacheLine { line, .. } => assert_eq!(line, 3),
        e => panic!("unexpected {e}"),
    }
}

#[test]
fn synthetic_generator_basics() {
    let cfg = SynthConfig::default();
    assert_eq!(synth_blocks(1, 1, &cfg), synth_blocks(1, 1, &cfg));
    let single = SynthConfig { pool_size: 1, ..cfg };
    for tx in synth_blocks(2, 5, &single).iter().flat_map(|b| &b.transactions) {
        assert_eq!(Some(tx.from), tx.to);
    }
    for b in synth_blocks(4, 20, &SynthConfig::default()) {
        assert_eq!(b.gas_used, b.transactions.iter().map(|t| t.gas).sum::<u64>());
        assert!(b.gas_used <= b.gas_limit);
    }
}

/// Second implementation of the documented generator, producing only the
/// (from, to) pool indices.
fn oracle_pairs(seed: u64, n_blocks: usize, pool: usize, min: usize, max: usize) -> Vec<(usize, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total: f64 = (1..=pool).map(|k| 1.0 / k as f64).sum();
    let mut cumulative = Vec::with_capacity(pool);
    let mut acc = 0.0;
    for k in 1..=pool {
        acc += (1.0 / k as f64) / total;
        cumulative.push(acc);
    }
    let pick = |rng: &mut ChaCha8Rng| {
        let u: f64 = rng.random();
        let mut k = 0;
        while k < pool - 1 && cumulative[k] <= u {
            k += 1;
        }
        k
    };
    let mut pairs = Vec::new();
    for _ in 0..n_blocks {
        let count = rng.random_range(min..=max);
        for _ in 0..count {
            let from = pick(&mut rng);
            let to = pick(&mut rng);
            let _value: u64 = rng.random();
            let _price = rng.random_range(1u128..=200);
            pairs.push((from, to));
        }
    }
    pairs
}

fn histogram(degrees: impl Iterator<Item = usize>) -> BTreeMap<usize, usize> {
    let mut h = BTreeMap::new();
    for d in degrees {
        *h.entry(d).or_insert(0) += 1;
    }
    h
}

#[test]
fn synthetic_degree_histogram_matches_second_generator() {
    let blocks = synth_blocks(7, 50, &SynthConfig::default());
    let graph = build_transaction_graph::<f64>(&blocks, &GraphOptions::default());
    let out_ours = histogram((0..graph.n_nodes()).map(|i| graph.raw_features.get(i, 0) as usize));
    let in_ours = histogram((0..graph.n_nodes()).map(|i| graph.raw_features.get(i, 1) as usize));

    let edges: BTreeSet<(usize, usize)> = oracle_pairs(7, 50, 64, 5, 15).into_iter().collect();
    let nodes: BTreeSet<usize> = edges.iter().flat_map(|&(a, b)| [a, b]).collect();
    let out_oracle = histogram(nodes.iter().map(|&v| edges.iter().filter(|e| e.0 == v).count()));
    let in_oracle = histogram(nodes.iter().map(|&v| edges.iter().filter(|e| e.1 == v).count()));
    assert_eq!(out_ours, out_oracle);
    assert_eq!(in_ours, in_oracle);
}
