//! Message-passing layers: forward passes with recorded intermediates and
//! exact reverse-mode gradients.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::activation::{leaky_relu, leaky_relu_grad, Activation};
use crate::dense::{dot, DenseMatrix, ShapeError};
use crate::scalar::Scalar;
use crate::txgraph::{sample_neighbors, SamplerConfig, SparseAdjacency};

/// Neighborhood pooling for sampled aggregation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pooling {
    /// Sum of sampled neighbors divided by `K`.
    Sum,
    /// Sum divided by the actual sample size.
    Mean,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LayerKind {
    GraphConv,
    Sage { sampler: SamplerConfig, pooling: Pooling },
    Gat { slope: f64 },
    /// Attention with bias, output scale and identity residual.
    GatRl { slope: f64 },
}

impl LayerKind {
    pub fn name(&self) -> &'static str {
        match self {
            LayerKind::GraphConv => "graphconv",
            LayerKind::Sage { .. } => "graphsage",
            LayerKind::Gat { .. } => "gat",
            LayerKind::GatRl { .. } => "gatrl",
        }
    }
}

/// Trainable layer parameters. Unused slots are empty vectors:
/// `attn` exists only for attention layers, `skip_scale` only for GAT-RL,
/// and plain GAT has no bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct LayerParams<T> {
    /// `d_in × d_out`.
    pub w: DenseMatrix<T>,
    pub b: Vec<T>,
    /// `[a_src ‖ a_dst]`, length `2·d_out`.
    pub attn: Vec<T>,
    pub skip_scale: Vec<T>,
}

impl<T: Scalar> LayerParams<T> {
    pub fn zeros_like(&self) -> Self {
        Self {
            w: DenseMatrix::zeros(self.w.rows(), self.w.cols()),
            b: vec![T::zero(); self.b.len()],
            attn: vec![T::zero(); self.attn.len()],
            skip_scale: vec![T::zero(); self.skip_scale.len()],
        }
    }

    pub fn d_in(&self) -> usize {
        self.w.rows()
    }

    pub fn d_out(&self) -> usize {
        self.w.cols()
    }

    /// Glorot-uniform weights and attention vector, zero bias, unit output scale.
    pub fn init(kind: &LayerKind, d_in: usize, d_out: usize, rng: &mut impl Rng) -> Self {
        let limit = (6.0 / (d_in + d_out).max(1) as f64).sqrt();
        let mut uniform = |lim: f64| T::lit((rng.random::<f64>() * 2.0 - 1.0) * lim);
        let w = DenseMatrix::from_fn(d_in, d_out, |_, _| uniform(limit));
        let attn_limit = (6.0 / (2 * d_out + 1) as f64).sqrt();
        let (b, attn, skip_scale) = match kind {
            LayerKind::GraphConv | LayerKind::Sage { .. } => (vec![T::zero(); d_out], vec![], vec![]),
            LayerKind::Gat { .. } => (vec![], (0..2 * d_out).map(|_| uniform(attn_limit)).collect(), vec![]),
            LayerKind::GatRl { .. } => (
                vec![T::zero(); d_out],
                (0..2 * d_out).map(|_| uniform(attn_limit)).collect(),
                vec![T::one(); d_out],
            ),
        };
        Self { w, b, attn, skip_scale }
    }

    /// Parameter groups in a fixed order: `w`, `b`, `attn`, `skip_scale`.
    pub fn slices(&self) -> [&[T]; 4] {
        [self.w.as_slice(), &self.b, &self.attn, &self.skip_scale]
    }

    pub fn slices_mut(&mut self) -> [&mut [T]; 4] {
        [self.w.as_mut_slice(), &mut self.b, &mut self.attn, &mut self.skip_scale]
    }

    pub fn is_finite(&self) -> bool {
        self.slices().iter().all(|s| s.iter().all(|v| v.is_finite()))
    }

    fn check_shapes(&self, kind: &LayerKind) -> Result<(), ShapeError> {
        let d = self.d_out();
        let (b, attn, skip) = match kind {
            LayerKind::GraphConv | LayerKind::Sage { .. } => (d, 0, 0),
            LayerKind::Gat { .. } => (0, 2 * d, 0),
            LayerKind::GatRl { .. } => (d, 2 * d, d),
        };
        if self.b.len() != b || self.attn.len() != attn || self.skip_scale.len() != skip {
            return Err(ShapeError::new(
                "LayerParams",
                format!(
                    "{} layer with d_out={d} expects b/attn/skip lengths {b}/{attn}/{skip}, got {}/{}/{}",
                    kind.name(),
                    self.b.len(),
                    self.attn.len(),
                    self.skip_scale.len()
                ),
            ));
        }
        Ok(())
    }
}

/// Attention coefficients on the adjacency sparsity pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionMatrix<T> {
    /// `α_ij`, row-softmax of `scores` over each node's neighbors.
    pub alpha: SparseAdjacency<T>,
    /// `e_ij = LeakyReLU(a_srcᵀ W h_i + a_dstᵀ W h_j)`, pre-softmax.
    pub scores: Vec<T>,
    /// Argument of the LeakyReLU for each edge.
    pub logits: Vec<T>,
}

impl<T: Scalar> AttentionMatrix<T> {
    pub fn row_sums(&self) -> Vec<T> {
        (0..self.alpha.n_nodes())
            .map(|i| self.alpha.row_values(i).iter().fold(T::zero(), |s, &v| s + v))
            .collect()
    }
}

/// Attention on projected features `proj = H·W`.
fn attention_from_projection<T: Scalar>(
    attn: &[T],
    adj: &SparseAdjacency<T>,
    proj: &DenseMatrix<T>,
    slope: T,
) -> AttentionMatrix<T> {
    let d = proj.cols();
    let (a_src, a_dst) = attn.split_at(d);
    let src: Vec<T> = (0..proj.rows()).map(|i| dot(a_src, proj.row(i))).collect();
    let dst: Vec<T> = (0..proj.rows()).map(|j| dot(a_dst, proj.row(j))).collect();
    let mut logits = Vec::with_capacity(adj.nnz());
    let mut scores = Vec::with_capacity(adj.nnz());
    let mut alpha_vals = Vec::with_capacity(adj.nnz());
    for i in 0..adj.n_nodes() {
        let start = scores.len();
        for &j in adj.neighbors(i) {
            let u = src[i] + dst[j];
            logits.push(u);
            scores.push(leaky_relu(u, slope));
        }
        let row = &scores[start..];
        let max = row.iter().fold(T::neg_infinity(), |m, &e| m.max(e));
        let exps: Vec<T> = row.iter().map(|&e| (e - max).exp()).collect();
        let z = exps.iter().fold(T::zero(), |s, &e| s + e);
        alpha_vals.extend(exps.into_iter().map(|e| e / z));
    }
    let alpha = SparseAdjacency::from_csr_parts(
        adj.n_nodes(),
        adj.row_ptr().to_vec(),
        adj.col_idx().to_vec(),
        alpha_vals,
    )
    .expect("same pattern as a valid adjacency");
    AttentionMatrix { alpha, scores, logits }
}

/// Sparse operator applying sampled neighborhood pooling: row `i` holds
/// `A_ij / K` (sum pooling) or `A_ij / |S_i|` (mean pooling) for sampled `j`.
pub fn sage_operator<T: Scalar>(
    adj: &SparseAdjacency<T>,
    sampler: &SamplerConfig,
    pooling: Pooling,
    epoch: u64,
) -> SparseAdjacency<T> {
    let mut triplets = Vec::new();
    for i in 0..adj.n_nodes() {
        let sampled = sample_neighbors(adj, i, sampler, epoch);
        let denom = match pooling {
            Pooling::Sum => T::from_usize_lossy(sampler.k),
            Pooling::Mean => T::from_usize_lossy(sampled.len().max(1)),
        };
        for j in sampled {
            triplets.push((i, j, adj.get(i, j) / denom));
        }
    }
    SparseAdjacency::from_coo(adj.n_nodes(), &triplets).expect("sampled ids are in range")
}

/// Intermediates recorded by a forward pass, consumed by `backward`.
#[derive(Debug, Clone)]
pub struct LayerCache<T> {
    input: DenseMatrix<T>,
    /// `H·W` for GraphConv/attention layers, `S·H` for GraphSAGE.
    proj: DenseMatrix<T>,
    pre: DenseMatrix<T>,
    activated: DenseMatrix<T>,
    sage_op: Option<SparseAdjacency<T>>,
    attention: Option<AttentionMatrix<T>>,
    output: DenseMatrix<T>,
}

impl<T> LayerCache<T> {
    pub fn output(&self) -> &DenseMatrix<T> {
        &self.output
    }

    pub fn attention(&self) -> Option<&AttentionMatrix<T>> {
        self.attention.as_ref()
    }

    pub fn into_output(self) -> DenseMatrix<T> {
        self.output
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Layer<T> {
    pub kind: LayerKind,
    pub act: Activation,
    pub params: LayerParams<T>,
}

impl<T: Scalar> Layer<T> {
    pub fn new(kind: LayerKind, act: Activation, params: LayerParams<T>) -> Result<Self, ShapeError> {
        params.check_shapes(&kind)?;
        act.validate().map_err(|e| ShapeError::new("Layer::new", e))?;
        Ok(Self { kind, act, params })
    }

    pub fn init(kind: LayerKind, act: Activation, d_in: usize, d_out: usize, rng: &mut impl Rng) -> Self {
        let params = LayerParams::init(&kind, d_in, d_out, rng);
        Self { kind, act, params }
    }

    fn check_input(&self, adj: &SparseAdjacency<T>, h: &DenseMatrix<T>) -> Result<(), ShapeError> {
        self.params.check_shapes(&self.kind)?;
        if adj.n_nodes() != h.rows() {
            return Err(ShapeError::new(
                "layer forward",
                format!("adjacency has {} nodes, embeddings have {} rows", adj.n_nodes(), h.rows()),
            ));
        }
        if h.cols() != self.params.d_in() {
            return Err(ShapeError::new(
                "layer forward",
                format!("embedding dim {} vs weight rows {}", h.cols(), self.params.d_in()),
            ));
        }
        Ok(())
    }

    fn has_residual(&self) -> bool {
        matches!(self.kind, LayerKind::GatRl { .. }) && self.params.d_in() == self.params.d_out()
    }

    /// Forward pass. `epoch` only affects GraphSAGE sampling.
    pub fn forward(&self, adj: &SparseAdjacency<T>, h: &DenseMatrix<T>, epoch: u64) -> Result<LayerCache<T>, ShapeError> {
        self.check_input(adj, h)?;
        let p = &self.params;
        let mut sage_op = None;
        let mut attention = None;
        let (proj, mut pre) = match self.kind {
            LayerKind::GraphConv => {
                let proj = h.matmul(&p.w)?;
                let mut pre = adj.spmm(&proj)?;
                pre.add_row_vector(&p.b)?;
                (proj, pre)
            }
            LayerKind::Sage { sampler, pooling } => {
                let op = sage_operator(adj, &sampler, pooling, epoch);
                let pooled = op.spmm(h)?;
                let mut pre = pooled.matmul(&p.w)?;
                pre.add_row_vector(&p.b)?;
                sage_op = Some(op);
                (pooled, pre)
            }
            LayerKind::Gat { slope } | LayerKind::GatRl { slope } => {
                let proj = h.matmul(&p.w)?;
                let att = attention_from_projection(&p.attn, adj, &proj, T::lit(slope));
                let pre = att.alpha.spmm(&proj)?;
                attention = Some(att);
                (proj, pre)
            }
        };
        if let LayerKind::GatRl { .. } = self.kind {
            pre.add_row_vector(&p.b)?;
            if self.has_residual() {
                pre.axpy(T::one(), h)?;
            }
        }
        let activated = pre.map(|z| self.act.apply(z));
        let output = if let LayerKind::GatRl { .. } = self.kind {
            DenseMatrix::from_fn(activated.rows(), activated.cols(), |i, k| activated.get(i, k) * p.skip_scale[k])
        } else {
            activated.clone()
        };
        Ok(LayerCache { input: h.clone(), proj, pre, activated, sage_op, attention, output })
    }

    /// Gradients of the loss with respect to the parameters and the layer input,
    /// given `grad_out = ∂L/∂output`.
    pub fn backward(
        &self,
        adj: &SparseAdjacency<T>,
        cache: &LayerCache<T>,
        grad_out: &DenseMatrix<T>,
    ) -> Result<(LayerParams<T>, DenseMatrix<T>), ShapeError> {
        if grad_out.shape() != cache.output.shape() {
            return Err(ShapeError::new(
                "layer backward",
                format!("gradient {:?} vs output {:?}", grad_out.shape(), cache.output.shape()),
            ));
        }
        let p = &self.params;
        let mut grads = p.zeros_like();
        let (n, d_out) = grad_out.shape();

        let grad_act = if let LayerKind::GatRl { .. } = self.kind {
            for i in 0..n {
                for k in 0..d_out {
                    grads.skip_scale[k] += grad_out.get(i, k) * cache.activated.get(i, k);
                }
            }
            DenseMatrix::from_fn(n, d_out, |i, k| grad_out.get(i, k) * p.skip_scale[k])
        } else {
            grad_out.clone()
        };
        let grad_pre =
            DenseMatrix::from_fn(n, d_out, |i, k| grad_act.get(i, k) * self.act.derivative(cache.pre.get(i, k)));
        if !grads.b.is_empty() {
            grads.b = grad_pre.column_sums();
        }

        let grad_in = match self.kind {
            LayerKind::GraphConv => {
                let grad_proj = adj.spmm_t(&grad_pre)?;
                grads.w = cache.input.t_matmul(&grad_proj)?;
                grad_proj.matmul_t(&p.w)?
            }
            LayerKind::Sage { .. } => {
                let op = cache.sage_op.as_ref().expect("sage forward records its operator");
                grads.w = cache.proj.t_matmul(&grad_pre)?;
                let grad_pooled = grad_pre.matmul_t(&p.w)?;
                op.spmm_t(&grad_pooled)?
            }
            LayerKind::Gat { slope } | LayerKind::GatRl { slope } => {
                let att = cache.attention.as_ref().expect("attention forward records coefficients");
                let proj = &cache.proj;
                let mut grad_proj = att.alpha.spmm_t(&grad_pre)?;
                let (a_src, a_dst) = p.attn.split_at(d_out);
                let mut grad_src = vec![T::zero(); n];
                let mut grad_dst = vec![T::zero(); n];
                let slope = T::lit(slope);
                for i in 0..n {
                    let nbrs = att.alpha.neighbors(i);
                    let alpha = att.alpha.row_values(i);
                    let base = att.alpha.row_ptr()[i];
                    let g_alpha: Vec<T> = nbrs.iter().map(|&j| dot(grad_pre.row(i), proj.row(j))).collect();
                    let mean = alpha.iter().zip(&g_alpha).fold(T::zero(), |s, (&a, &g)| s + a * g);
                    for (k, &j) in nbrs.iter().enumerate() {
                        let g_score = alpha[k] * (g_alpha[k] - mean);
                        let g_logit = g_score * leaky_relu_grad(att.logits[base + k], slope);
                        grad_src[i] += g_logit;
                        grad_dst[j] += g_logit;
                    }
                }
                for i in 0..n {
                    let row = proj.row(i);
                    for k in 0..d_out {
                        grads.attn[k] += grad_src[i] * row[k];
                        grads.attn[d_out + k] += grad_dst[i] * row[k];
                    }
                    let gp = grad_proj.row_mut(i);
                    for k in 0..d_out {
                        gp[k] += grad_src[i] * a_src[k] + grad_dst[i] * a_dst[k];
                    }
                }
                grads.w = cache.input.t_matmul(&grad_proj)?;
                let mut grad_in = grad_proj.matmul_t(&p.w)?;
                if self.has_residual() {
                    grad_in.axpy(T::one(), &grad_pre)?;
                }
                grad_in
            }
        };
        Ok((grads, grad_in))
    }
}

/// `act(Σ_j A_ij W h_j + b)` for every node.
pub fn graphconv_forward<T: Scalar>(
    params: &LayerParams<T>,
    adj: &SparseAdjacency<T>,
    h: &DenseMatrix<T>,
    act: Activation,
) -> Result<DenseMatrix<T>, ShapeError> {
    Layer::new(LayerKind::GraphConv, act, params.clone())?.forward(adj, h, 0).map(LayerCache::into_output)
}

/// Sampled-neighborhood aggregation; `epoch` selects the sampler stream.
pub fn sage_forward<T: Scalar>(
    params: &LayerParams<T>,
    adj: &SparseAdjacency<T>,
    h: &DenseMatrix<T>,
    sampler: SamplerConfig,
    pooling: Pooling,
    act: Activation,
    epoch: u64,
) -> Result<DenseMatrix<T>, ShapeError> {
    Layer::new(LayerKind::Sage { sampler, pooling }, act, params.clone())?
        .forward(adj, h, epoch)
        .map(LayerCache::into_output)
}

pub fn gat_attention<T: Scalar>(
    params: &LayerParams<T>,
    adj: &SparseAdjacency<T>,
    h: &DenseMatrix<T>,
    slope: f64,
) -> Result<AttentionMatrix<T>, ShapeError> {
    if params.attn.len() != 2 * params.d_out() {
        return Err(ShapeError::new(
            "gat_attention",
            format!("attention vector length {} for d_out {}", params.attn.len(), params.d_out()),
        ));
    }
    if adj.n_nodes() != h.rows() || h.cols() != params.d_in() {
        return Err(ShapeError::new(
            "gat_attention",
            format!("adjacency {} nodes, embeddings {:?}, weights {:?}", adj.n_nodes(), h.shape(), params.w.shape()),
        ));
    }
    let proj = h.matmul(&params.w)?;
    Ok(attention_from_projection(&params.attn, adj, &proj, T::lit(slope)))
}

/// `act(Σ_j α_ij W h_j)`, no bias.
pub fn gat_forward<T: Scalar>(
    params: &LayerParams<T>,
    adj: &SparseAdjacency<T>,
    h: &DenseMatrix<T>,
    act: Activation,
    slope: f64,
) -> Result<DenseMatrix<T>, ShapeError> {
    Layer::new(LayerKind::Gat { slope }, act, params.clone())?.forward(adj, h, 0).map(LayerCache::into_output)
}

/// `act(Σ_j α_ij W h_j + b [+ h_i]) ⊙ skip_scale`; the `h_i` residual is
/// present when input and output widths match.
pub fn gatrl_forward<T: Scalar>(
    params: &LayerParams<T>,
    adj: &SparseAdjacency<T>,
    h: &DenseMatrix<T>,
    act: Activation,
    slope: f64,
) -> Result<DenseMatrix<T>, ShapeError> {
    Layer::new(LayerKind::GatRl { slope }, act, params.clone())?.forward(adj, h, 0).map(LayerCache::into_output)
}
