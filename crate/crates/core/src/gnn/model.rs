use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::activation::Activation;
use super::layer::{Layer, LayerCache, LayerKind, LayerParams, Pooling};
use crate::dense::{DenseMatrix, ShapeError};
use crate::scalar::Scalar;
use crate::txgraph::{SamplerConfig, SparseAdjacency};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayerType {
    GraphConv,
    GraphSage,
    Gat,
    GatRl,
}

impl LayerType {
    pub fn name(&self) -> &'static str {
        match self {
            LayerType::GraphConv => "GraphConv",
            LayerType::GraphSage => "GraphSAGE",
            LayerType::Gat => "GAT",
            LayerType::GatRl => "GAT-RL",
        }
    }
}

/// Architecture description; dimensions of the input come from the data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub layer: LayerType,
    pub n_layers: usize,
    pub hidden_dim: usize,
    pub activation: Activation,
    pub n_classes: usize,
    pub sage_k: usize,
    pub pooling: Pooling,
    pub attn_slope: f64,
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self {
            layer: LayerType::GraphConv,
            n_layers: 2,
            hidden_dim: 16,
            activation: Activation::ReLU,
            n_classes: 2,
            sage_k: 5,
            pooling: Pooling::Mean,
            attn_slope: 0.2,
        }
    }
}

impl ModelSpec {
    pub fn with_layer(layer: LayerType) -> Self {
        Self { layer, ..Self::default() }
    }

    pub fn validate(&self) -> Vec<String> {
        let mut problems = Vec::new();
        if self.n_layers == 0 {
            problems.push("n_layers must be at least 1".to_owned());
        }
        if self.hidden_dim == 0 {
            problems.push("hidden_dim must be at least 1".to_owned());
        }
        if self.n_classes < 2 {
            problems.push("n_classes must be at least 2".to_owned());
        }
        if self.sage_k == 0 {
            problems.push("sage_k must be at least 1".to_owned());
        }
        if !(self.attn_slope > 0.0 && self.attn_slope < 1.0) {
            problems.push(format!("attention slope {} outside (0,1)", self.attn_slope));
        }
        if let Err(e) = self.activation.validate() {
            problems.push(e);
        }
        problems
    }

    fn layer_kind(&self, sampler_seed: u64) -> LayerKind {
        match self.layer {
            LayerType::GraphConv => LayerKind::GraphConv,
            LayerType::GraphSage => LayerKind::Sage {
                sampler: SamplerConfig { k: self.sage_k, seed: sampler_seed },
                pooling: self.pooling,
            },
            LayerType::Gat => LayerKind::Gat { slope: self.attn_slope },
            LayerType::GatRl => LayerKind::GatRl { slope: self.attn_slope },
        }
    }
}

/// Linear map from final embeddings to class logits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ClassifierHead<T> {
    /// `d × C`.
    pub w: DenseMatrix<T>,
    pub b: Vec<T>,
}

impl<T: Scalar> ClassifierHead<T> {
    pub fn init(d: usize, classes: usize, rng: &mut impl Rng) -> Self {
        let limit = (6.0 / (d + classes) as f64).sqrt();
        let w = DenseMatrix::from_fn(d, classes, |_, _| T::lit((rng.random::<f64>() * 2.0 - 1.0) * limit));
        Self { w, b: vec![T::zero(); classes] }
    }

    pub fn forward(&self, h: &DenseMatrix<T>) -> Result<DenseMatrix<T>, ShapeError> {
        let mut out = h.matmul(&self.w)?;
        out.add_row_vector(&self.b)?;
        Ok(out)
    }

    fn zeros_like(&self) -> Self {
        Self { w: DenseMatrix::zeros(self.w.rows(), self.w.cols()), b: vec![T::zero(); self.b.len()] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct GnnModel<T> {
    pub spec: ModelSpec,
    pub layers: Vec<Layer<T>>,
    pub head: ClassifierHead<T>,
}

/// Recorded forward pass.
#[derive(Debug, Clone)]
pub struct ForwardPass<T> {
    pub caches: Vec<LayerCache<T>>,
    pub embedding: DenseMatrix<T>,
    pub logits: DenseMatrix<T>,
}

/// Gradients shaped like the model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelGrads<T> {
    pub layers: Vec<LayerParams<T>>,
    pub head: ClassifierHead<T>,
}

impl<T: Scalar> ModelGrads<T> {
    pub fn slices(&self) -> Vec<&[T]> {
        let mut out: Vec<&[T]> = self.layers.iter().flat_map(|p| p.slices()).collect();
        out.push(self.head.w.as_slice());
        out.push(&self.head.b);
        out
    }

    pub fn is_zero(&self) -> bool {
        self.slices().iter().all(|s| s.iter().all(|v| *v == T::zero()))
    }
}

impl<T: Scalar> GnnModel<T> {
    /// Seeded initialization; the same seed also drives GraphSAGE sampling.
    pub fn init(spec: ModelSpec, in_dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let kind = spec.layer_kind(seed ^ 0x5a6e_5a6e);
        let mut layers = Vec::with_capacity(spec.n_layers);
        let mut d = in_dim;
        for _ in 0..spec.n_layers {
            layers.push(Layer::init(kind, spec.activation, d, spec.hidden_dim, &mut rng));
            d = spec.hidden_dim;
        }
        let head = ClassifierHead::init(d, spec.n_classes, &mut rng);
        Self { spec, layers, head }
    }

    pub fn forward(&self, adj: &SparseAdjacency<T>, x: &DenseMatrix<T>, epoch: u64) -> Result<ForwardPass<T>, ShapeError> {
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut h = x.clone();
        for layer in &self.layers {
            let cache = layer.forward(adj, &h, epoch)?;
            h = cache.output().clone();
            caches.push(cache);
        }
        let logits = self.head.forward(&h)?;
        Ok(ForwardPass { caches, embedding: h, logits })
    }

    pub fn logits(&self, adj: &SparseAdjacency<T>, x: &DenseMatrix<T>, epoch: u64) -> Result<DenseMatrix<T>, ShapeError> {
        self.forward(adj, x, epoch).map(|p| p.logits)
    }

    /// Backpropagates `grad_logits = ∂L/∂logits` through the head and every layer.
    pub fn backward(
        &self,
        adj: &SparseAdjacency<T>,
        pass: &ForwardPass<T>,
        grad_logits: &DenseMatrix<T>,
    ) -> Result<ModelGrads<T>, ShapeError> {
        let mut head = self.head.zeros_like();
        head.w = pass.embedding.t_matmul(grad_logits)?;
        head.b = grad_logits.column_sums();
        let mut grad_h = grad_logits.matmul_t(&self.head.w)?;
        let mut layers = Vec::with_capacity(self.layers.len());
        for (layer, cache) in self.layers.iter().zip(&pass.caches).rev() {
            let (g, gin) = layer.backward(adj, cache, &grad_h)?;
            layers.push(g);
            grad_h = gin;
        }
        layers.reverse();
        Ok(ModelGrads { layers, head })
    }

    pub fn param_slices(&self) -> Vec<&[T]> {
        let mut out: Vec<&[T]> = self.layers.iter().flat_map(|l| l.params.slices()).collect();
        out.push(self.head.w.as_slice());
        out.push(&self.head.b);
        out
    }

    pub fn param_slices_mut(&mut self) -> Vec<&mut [T]> {
        let mut out: Vec<&mut [T]> = self.layers.iter_mut().flat_map(|l| l.params.slices_mut()).collect();
        out.push(self.head.w.as_mut_slice());
        out.push(&mut self.head.b);
        out
    }

    pub fn n_params(&self) -> usize {
        self.param_slices().iter().map(|s| s.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.param_slices().iter().all(|s| s.iter().all(|v| v.is_finite()))
    }
}
