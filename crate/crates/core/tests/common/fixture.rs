use ethgnn::ingest::*;
use ruint::aliases::U256;
use serde_json::Value;

pub const FIXTURE: &str = include_str!("../fixtures/eth_getBlockByNumber.json");

pub fn addr(s: &str) -> Address {
    Address::parse(s).unwrap()
}

pub fn fixture_result() -> Value {
    serde_json::from_str::<Value>(FIXTURE).unwrap()["result"].clone()
}

/// Every field of the recorded fixture, decoded by hand.
pub fn fixture_oracle() -> BlockRecord {
    let a = addr("0xa9d1e08c7793af67e9d92fe308d5697fb81d3e43");
    let b = addr("0x28c6c06298d514db089934071355e5743bf21d60");
    let c = addr("0xde0b295669a9fd93d5f28d9ec85e40f4cb697bae");
    BlockRecord {
        number: 18_000_000,
        timestamp: 1_694_113_315,
        gas_limit: 30_000_000,
        gas_used: 542_000,
        transactions: vec![
            TxRecord {
                hash: TxHash::parse("0x0f1e2d3c4b5a69788796a5b4c3d2e1f00f1e2d3c4b5a69788796a5b4c3d2e1f0").unwrap(),
                from: a,
                to: Some(b),
                value: U256::from(2_000_000_000_000_000_000u128),
                gas: 21_000,
                gas_price: 20_000_000_000,
            },
            TxRecord {
                hash: TxHash::parse("0xa0b1c2d3e4f5061728394a5b6c7d8e9fa0b1c2d3e4f5061728394a5b6c7d8e9f").unwrap(),
                from: b,
                to: None,
                value: U256::ZERO,
                gas: 500_000,
                gas_price: 10_000_000_000,
            },
            TxRecord {
                hash: TxHash::parse("0xfedcba9876543210fedcba9876543210fedcba9876543210fedcba9876543210").unwrap(),
                from: c,
                to: Some(a),
                value: U256::from(5_000_000_000_000_000_000_000u128),
                gas: 21_000,
                gas_price: 1_000_000_000,
            },
        ],
    }
}
