//! Independent reference implementations shared by the integration tests.
//! Nothing here calls the kernels it is used to check.

#![allow(dead_code)]

pub mod fixture;
pub mod gas;
pub mod mdp;
pub mod ppo;
pub mod server;

use ethgnn::dense::DenseMatrix;
use ethgnn::txgraph::SparseAdjacency;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Dense = Vec<Vec<f64>>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random directed graph with `edges` attempted edges and weights in [0.5, 2).
pub fn random_graph(n: usize, edges: usize, seed: u64) -> SparseAdjacency<f64> {
    let mut r = rng(seed);
    let t: Vec<_> = (0..edges)
        .map(|_| (r.random_range(0..n), r.random_range(0..n), 0.5 + 1.5 * r.random::<f64>()))
        .collect();
    SparseAdjacency::from_coo(n, &t).unwrap()
}

/// Random graph with unit weights where every node has at least one neighbor.
pub fn random_connected_graph(n: usize, extra: usize, seed: u64) -> SparseAdjacency<f64> {
    let mut r = rng(seed);
    let mut t: Vec<_> = (0..n).map(|i| (i, (i + 1 + r.random_range(0..n - 1)) % n, 1.0)).collect();
    t.extend((0..extra).map(|_| (r.random_range(0..n), r.random_range(0..n), 1.0)));
    let a = SparseAdjacency::from_coo(n, &t).unwrap();
    a.map_values(|_, _, _| 1.0)
}

pub fn random_matrix(rows: usize, cols: usize, seed: u64) -> DenseMatrix<f64> {
    let mut r = rng(seed);
    DenseMatrix::from_fn(rows, cols, |_, _| r.random::<f64>() * 2.0 - 1.0)
}

pub fn random_vec(n: usize, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    (0..n).map(|_| r.random::<f64>() * 2.0 - 1.0).collect()
}

pub fn to_rows(m: &DenseMatrix<f64>) -> Dense {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

/// Dense adjacency via explicit enumeration of stored triplets.
pub fn dense_adj(a: &SparseAdjacency<f64>) -> Dense {
    let n = a.n_nodes();
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for (k, &j) in a.neighbors(i).iter().enumerate() {
            d[i][j] += a.row_values(i)[k];
        }
    }
    d
}

pub fn dense_matmul(a: &Dense, b: &Dense) -> Dense {
    let inner = b.len();
    let cols = b.first().map_or(0, Vec::len);
    a.iter()
        .map(|row| {
            (0..cols)
                .map(|j| (0..inner).map(|k| row[k] * b[k][j]).sum())
                .collect()
        })
        .collect()
}

pub fn max_abs_diff(a: &Dense, b: &DenseMatrix<f64>) -> f64 {
    let mut m: f64 = 0.0;
    assert_eq!(a.len(), b.rows());
    for (i, row) in a.iter().enumerate() {
        assert_eq!(row.len(), b.cols());
        for (j, &v) in row.iter().enumerate() {
            m = m.max((v - b.get(i, j)).abs());
        }
    }
    m
}

#[derive(Clone, Copy)]
pub enum Act {
    Relu,
    Leaky(f64),
    Sigmoid,
    Identity,
}

pub fn act(a: Act, z: f64) -> f64 {
    match a {
        Act::Relu => {
            if z > 0.0 { z } else { 0.0 }
        }
        Act::Leaky(s) => {
            if z > 0.0 { z } else { s * z }
        }
        Act::Sigmoid => 1.0 / (1.0 + (-z).exp()),
        Act::Identity => z,
    }
}

/// `W·h` where `w` is `d_in × d_out` and `h` has `d_in` entries.
fn project(w: &DenseMatrix<f64>, h: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; w.cols()];
    for k in 0..w.cols() {
        for (r, &hv) in h.iter().enumerate() {
            out[k] += w.get(r, k) * hv;
        }
    }
    out
}

/// Per-node loop: `act(Σ_j A_ij W h_j + b)`.
pub fn graphconv_loop(a: &Dense, h: &Dense, w: &DenseMatrix<f64>, b: &[f64], f: Act) -> Dense {
    let n = a.len();
    (0..n)
        .map(|i| {
            let mut acc = b.to_vec();
            for j in 0..n {
                if a[i][j] != 0.0 {
                    for (k, v) in project(w, &h[j]).into_iter().enumerate() {
                        acc[k] += a[i][j] * v;
                    }
                }
            }
            acc.into_iter().map(|z| act(f, z)).collect()
        })
        .collect()
}

/// Per-node loop over a caller-supplied neighbor sample; `denom(i)` is the pooling divisor.
pub fn sage_loop(
    a: &Dense,
    h: &Dense,
    samples: &[Vec<usize>],
    denom: impl Fn(usize) -> f64,
    w: &DenseMatrix<f64>,
    b: &[f64],
    f: Act,
) -> Dense {
    (0..a.len())
        .map(|i| {
            let d_in = h[0].len();
            let mut pooled = vec![0.0; d_in];
            for &j in &samples[i] {
                for r in 0..d_in {
                    pooled[r] += a[i][j] * h[j][r];
                }
            }
            let dv = denom(i);
            let pooled: Vec<f64> = pooled.into_iter().map(|v| v / dv).collect();
            project(w, &pooled).into_iter().zip(b).map(|(z, bb)| act(f, z + bb)).collect()
        })
        .collect()
}

/// Attention coefficients by direct evaluation: returns, per node, `(j, α_ij)` pairs.
pub fn attention_loop(a: &Dense, h: &Dense, w: &DenseMatrix<f64>, attn: &[f64], slope: f64) -> Vec<Vec<(usize, f64)>> {
    let d = w.cols();
    let n = a.len();
    let proj: Vec<Vec<f64>> = h.iter().map(|r| project(w, r)).collect();
    (0..n)
        .map(|i| {
            let nbrs: Vec<usize> = (0..n).filter(|&j| a[i][j] != 0.0).collect();
            let scores: Vec<f64> = nbrs
                .iter()
                .map(|&j| {
                    let mut u = 0.0;
                    for k in 0..d {
                        u += attn[k] * proj[i][k] + attn[d + k] * proj[j][k];
                    }
                    act(Act::Leaky(slope), u)
                })
                .collect();
            let z: f64 = scores.iter().map(|s| s.exp()).sum();
            nbrs.into_iter().zip(scores).map(|(j, s)| (j, s.exp() / z)).collect()
        })
        .collect()
}

/// GAT-RL style loop: `act(Σ α_ij W h_j + b + [h_i]) ⊙ c`; plain GAT is
/// `b = 0`, `c = 1`, no residual.
#[allow(clippy::too_many_arguments)]
pub fn gat_loop(
    a: &Dense,
    h: &Dense,
    w: &DenseMatrix<f64>,
    attn: &[f64],
    b: Option<&[f64]>,
    scale: Option<&[f64]>,
    residual: bool,
    slope: f64,
    f: Act,
) -> Dense {
    let d = w.cols();
    let alpha = attention_loop(a, h, w, attn, slope);
    (0..a.len())
        .map(|i| {
            let mut z = vec![0.0; d];
            for &(j, al) in &alpha[i] {
                for (k, v) in project(w, &h[j]).into_iter().enumerate() {
                    z[k] += al * v;
                }
            }
            (0..d)
                .map(|k| {
                    let mut v = z[k] + b.map_or(0.0, |b| b[k]);
                    if residual {
                        v += h[i][k];
                    }
                    act(f, v) * scale.map_or(1.0, |c| c[k])
                })
                .collect()
        })
        .collect()
}

/// Relative error with the denominator floored at 1e-6, so gradients that are
/// zero analytically compare on an absolute scale.
pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

/// Central differences of `loss` with respect to every entry of every group in
/// `params`, in order.
pub fn central_differences<P: Clone>(
    params: &P,
    groups: impl Fn(&mut P) -> Vec<&mut [f64]>,
    loss: impl Fn(&P) -> f64,
    step: f64,
) -> Vec<Vec<f64>> {
    let mut work = params.clone();
    let sizes: Vec<usize> = groups(&mut work).iter().map(|g| g.len()).collect();
    let mut out = Vec::new();
    for (g, &len) in sizes.iter().enumerate() {
        let mut col = Vec::with_capacity(len);
        for k in 0..len {
            let orig = groups(&mut work)[g][k];
            groups(&mut work)[g][k] = orig + step;
            let plus = loss(&work);
            groups(&mut work)[g][k] = orig - step;
            let minus = loss(&work);
            groups(&mut work)[g][k] = orig;
            col.push((plus - minus) / (2.0 * step));
        }
        out.push(col);
    }
    out
}

/// Largest relative error between analytic groups and numeric groups.
pub fn worst_rel_err(analytic: &[&[f64]], numeric: &[Vec<f64>]) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    let mut worst: f64 = 0.0;
    for (a, n) in analytic.iter().zip(numeric) {
        assert_eq!(a.len(), n.len());
        for (&x, &y) in a.iter().zip(n) {
            worst = worst.max(rel_err(x, y));
        }
    }
    worst
}

/// Value iteration for a deterministic MDP given as `next[s][a]`, `reward[s][a]`.
pub fn value_iteration(next: &[Vec<usize>], reward: &[Vec<f64>], gamma: f64) -> Vec<Vec<f64>> {
    let s = next.len();
    let a = next[0].len();
    let mut q = vec![vec![0.0; a]; s];
    loop {
        let v: Vec<f64> = q.iter().map(|row| row.iter().cloned().fold(f64::NEG_INFINITY, f64::max)).collect();
        let mut delta: f64 = 0.0;
        for st in 0..s {
            for ac in 0..a {
                let nq = reward[st][ac] + gamma * v[next[st][ac]];
                delta = delta.max((nq - q[st][ac]).abs());
                q[st][ac] = nq;
            }
        }
        if delta < 1e-13 {
            return q;
        }
    }
}

pub fn greedy(q: &[Vec<f64>]) -> Vec<usize> {
    q.iter()
        .map(|row| {
            let mut best = 0;
            for k in 1..row.len() {
                if row[k] > row[best] {
                    best = k;
                }
            }
            best
        })
        .collect()
}
