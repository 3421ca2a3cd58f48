use std::collections::{BTreeMap, BTreeSet, HashMap};

use ruint::aliases::U256;
use serde::{Deserialize, Serialize};

use super::SparseAdjacency;
use crate::dense::DenseMatrix;
use crate::ingest::hex::wei_to_ether;
use crate::ingest::{Address, BlockRecord};
use crate::scalar::Scalar;

/// Column names of the raw node feature matrix, in order.
pub const FEATURE_NAMES: [&str; 6] = [
    "out_degree",
    "in_degree",
    "tx_count_sent",
    "tx_count_received",
    "log1p_ether_sent",
    "log1p_ether_received",
];

pub const COL_TX_SENT: usize = 2;
pub const COL_TX_RECEIVED: usize = 3;

/// Bijection between addresses and dense node ids `0..N`.
///
/// Ids follow ascending address order, so the same address set always maps
/// to the same ids regardless of the order blocks are supplied in.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AddressIndex {
    addresses: Vec<Address>,
    ids: HashMap<Address, usize>,
}

impl AddressIndex {
    pub fn from_addresses(set: BTreeSet<Address>) -> Self {
        let addresses: Vec<Address> = set.into_iter().collect();
        let ids = addresses.iter().enumerate().map(|(i, a)| (*a, i)).collect();
        Self { addresses, ids }
    }

    pub fn len(&self) -> usize {
        self.addresses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.addresses.is_empty()
    }

    pub fn id_of(&self, a: &Address) -> Option<usize> {
        self.ids.get(a).copied()
    }

    pub fn address_of(&self, id: usize) -> Option<&Address> {
        self.addresses.get(id)
    }

    pub fn addresses(&self) -> &[Address] {
        &self.addresses
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum EdgeWeighting {
    /// Number of transactions on the edge.
    #[default]
    Count,
    /// Total transferred value in ether.
    Value,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphOptions {
    pub directed: bool,
    pub weighting: EdgeWeighting,
    pub self_loops: bool,
}

impl Default for GraphOptions {
    fn default() -> Self {
        Self { directed: true, weighting: EdgeWeighting::Count, self_loops: false }
    }
}

/// Per-column affine transform `(x - mean) / std`, fitted once and reused.
///
/// Columns with (near-)zero spread are centered but not scaled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Standardizer<T> {
    pub mean: Vec<T>,
    pub std: Vec<T>,
}

impl<T: Scalar> Standardizer<T> {
    pub fn fit(x: &DenseMatrix<T>) -> Self {
        let n = x.rows();
        let d = x.cols();
        if n == 0 {
            return Self { mean: vec![T::zero(); d], std: vec![T::one(); d] };
        }
        let nf = T::from_usize_lossy(n);
        let mean: Vec<T> = x.column_sums().into_iter().map(|s| s / nf).collect();
        let mut var = vec![T::zero(); d];
        for i in 0..n {
            for (j, &v) in x.row(i).iter().enumerate() {
                let c = v - mean[j];
                var[j] += c * c;
            }
        }
        let std = var
            .into_iter()
            .map(|v| {
                let s = (v / nf).sqrt();
                if s > T::lit(1e-12) { s } else { T::one() }
            })
            .collect();
        Self { mean, std }
    }

    pub fn apply(&self, x: &DenseMatrix<T>) -> DenseMatrix<T> {
        DenseMatrix::from_fn(x.rows(), x.cols(), |i, j| (x.get(i, j) - self.mean[j]) / self.std[j])
    }
}

/// Address graph plus node features for a set of blocks.
#[derive(Debug, Clone)]
pub struct TransactionGraph<T> {
    pub index: AddressIndex,
    pub adjacency: SparseAdjacency<T>,
    /// Unstandardized features, columns as in [`FEATURE_NAMES`].
    pub raw_features: DenseMatrix<T>,
    pub features: DenseMatrix<T>,
    pub standardizer: Standardizer<T>,
}

impl<T: Scalar> TransactionGraph<T> {
    pub fn n_nodes(&self) -> usize {
        self.index.len()
    }

    /// Total transactions sent plus received per node.
    pub fn tx_counts(&self) -> Vec<T> {
        (0..self.n_nodes())
            .map(|i| self.raw_features.get(i, COL_TX_SENT) + self.raw_features.get(i, COL_TX_RECEIVED))
            .collect()
    }
}

#[derive(Default)]
struct NodeStats {
    sent: u64,
    received: u64,
    wei_sent: U256,
    wei_received: U256,
}

/// Builds the address graph: one node per address seen as sender or
/// recipient, one edge sender→recipient per transaction with duplicates
/// merged. Contract creations are skipped.
pub fn build_transaction_graph<T: Scalar>(blocks: &[BlockRecord], opts: &GraphOptions) -> TransactionGraph<T> {
    let mut addresses = BTreeSet::new();
    for tx in blocks.iter().flat_map(|b| &b.transactions) {
        if let Some(to) = tx.to {
            addresses.insert(tx.from);
            addresses.insert(to);
        }
    }
    let index = AddressIndex::from_addresses(addresses);
    let n = index.len();

    let mut edges: BTreeMap<(usize, usize), (u64, U256)> = BTreeMap::new();
    let mut stats: Vec<NodeStats> = (0..n).map(|_| NodeStats::default()).collect();
    for tx in blocks.iter().flat_map(|b| &b.transactions) {
        let Some(to) = tx.to else { continue };
        let s = index.id_of(&tx.from).expect("indexed");
        let r = index.id_of(&to).expect("indexed");
        let e = edges.entry((s, r)).or_insert((0, U256::ZERO));
        e.0 += 1;
        e.1 = e.1.saturating_add(tx.value);
        stats[s].sent += 1;
        stats[s].wei_sent = stats[s].wei_sent.saturating_add(tx.value);
        stats[r].received += 1;
        stats[r].wei_received = stats[r].wei_received.saturating_add(tx.value);
    }

    let mut out_degree = vec![0usize; n];
    let mut in_degree = vec![0usize; n];
    let mut triplets = Vec::with_capacity(edges.len());
    for (&(s, r), &(count, wei)) in &edges {
        out_degree[s] += 1;
        in_degree[r] += 1;
        let w = match opts.weighting {
            EdgeWeighting::Count => T::lit(count as f64),
            EdgeWeighting::Value => T::lit(wei_to_ether(wei)),
        };
        triplets.push((s, r, w));
    }
    let mut adjacency = SparseAdjacency::from_coo(n, &triplets).expect("ids are in range");
    if !opts.directed {
        adjacency = adjacency.symmetrize();
    }
    if opts.self_loops {
        adjacency = adjacency.with_self_loops(T::one());
    }

    let raw_features = DenseMatrix::from_fn(n, FEATURE_NAMES.len(), |i, j| {
        let st = &stats[i];
        T::lit(match j {
            0 => out_degree[i] as f64,
            1 => in_degree[i] as f64,
            2 => st.sent as f64,
            3 => st.received as f64,
            4 => wei_to_ether(st.wei_sent).ln_1p(),
            _ => wei_to_ether(st.wei_received).ln_1p(),
        })
    });
    let standardizer = Standardizer::fit(&raw_features);
    let features = standardizer.apply(&raw_features);
    TransactionGraph { index, adjacency, raw_features, features, standardizer }
}
