//! Target classifiers.
//!
//! [`Arch::S2v`] is structure2vec with sum pooling and a linear head, used
//! for graph classification. [`Arch::Gcn`] is a degree-normalized graph
//! convolution used for node classification. Both expose analytic parameter
//! gradients and gradients with respect to per-pair adjacency coefficients
//! `alpha_uv`, evaluated at `alpha = A`.

pub mod gcn;
pub mod s2v;
pub mod train;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::linalg::{argmax, cross_entropy, softmax};
use crate::params::{ParamStore, Tensor};
use crate::seed;

pub use gcn::GcnCache;
pub use s2v::{S2vCache, S2vEncoder};
pub use train::{train, TrainHyper, TrainReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Arch {
    S2v,
    Gcn,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GnnConfig {
    pub arch: Arch,
    /// Propagation steps `K`.
    pub depth: usize,
    pub embed_dim: usize,
    pub num_classes: usize,
    /// Node feature width; graphs without features use a constant 1.0.
    pub input_dim: usize,
    /// Largest node set for which dense alpha gradients are produced.
    pub alpha_node_limit: usize,
}

impl GnnConfig {
    pub fn s2v(depth: usize, embed_dim: usize, num_classes: usize) -> Self {
        GnnConfig { arch: Arch::S2v, depth, embed_dim, num_classes, input_dim: 1, alpha_node_limit: 512 }
    }

    pub fn gcn(depth: usize, embed_dim: usize, num_classes: usize, input_dim: usize) -> Self {
        GnnConfig { arch: Arch::Gcn, depth, embed_dim, num_classes, input_dim, alpha_node_limit: 512 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.depth == 0 || self.embed_dim == 0 || self.num_classes == 0 || self.input_dim == 0 {
            return Err(Error::InvalidArgument(format!("degenerate model config {self:?}")));
        }
        Ok(())
    }

    /// Names and shapes of every parameter tensor.
    pub fn param_shapes(&self) -> Vec<(alloc::string::String, Vec<usize>)> {
        let (d, y, i) = (self.embed_dim, self.num_classes, self.input_dim);
        match self.arch {
            Arch::S2v => vec![
                ("s2v.w_node".into(), vec![d, i]),
                ("s2v.w_msg".into(), vec![d, d]),
                ("s2v.w_out".into(), vec![y, d]),
                ("s2v.b_out".into(), vec![y]),
            ],
            Arch::Gcn => (0..self.depth)
                .map(|k| {
                    let rows = if k + 1 == self.depth { y } else { d };
                    let cols = if k == 0 { i } else { d };
                    (format!("gcn.w{k}"), vec![rows, cols])
                })
                .collect(),
        }
    }
}

/// One supervised term: a graph (or a node of it when `node` is set), its
/// class id, and the weight of its loss in the objective.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Target {
    pub node: Option<NodeId>,
    pub label: usize,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub class: usize,
    pub confidence: Vec<f64>,
}

impl Prediction {
    pub fn from_logits(logits: &[f64]) -> Self {
        Prediction { class: argmax(logits).unwrap_or(0), confidence: softmax(logits) }
    }
}

/// Cached activations of one forward pass.
#[derive(Clone, Debug)]
pub enum EmbeddingState {
    S2v(S2vCache),
    Gcn(GcnCache),
}

/// `dL/d alpha_uv` over a node subset, dense and symmetric.
#[derive(Clone, Debug, PartialEq)]
pub struct AlphaGradients {
    /// Sorted node ids; row/column `i` refers to `nodes[i]`.
    pub nodes: Vec<NodeId>,
    pub values: Vec<f64>,
}

impl AlphaGradients {
    /// Gradient for a pair of graph node ids, if both are covered.
    pub fn get(&self, u: NodeId, v: NodeId) -> Option<f64> {
        let i = self.nodes.binary_search(&u).ok()?;
        let j = self.nodes.binary_search(&v).ok()?;
        Some(self.values[i * self.nodes.len() + j])
    }

    /// Iterates `(u, v, gradient)` over unordered pairs `u < v`.
    pub fn pairs(&self) -> impl Iterator<Item = (NodeId, NodeId, f64)> + '_ {
        let s = self.nodes.len();
        (0..s).flat_map(move |i| (i + 1..s).map(move |j| (self.nodes[i], self.nodes[j], self.values[i * s + j])))
    }
}

/// Model inputs: the node feature block, or a constant 1.0 per node.
pub fn node_inputs(g: &Graph, input_dim: usize) -> Result<Vec<f64>> {
    if g.node_dim() == 0 {
        if input_dim != 1 {
            return Err(Error::ShapeMismatch { name: "node features".into(), expected: vec![input_dim], found: vec![0] });
        }
        return Ok(vec![1.0; g.num_nodes()]);
    }
    if g.node_dim() != input_dim {
        return Err(Error::ShapeMismatch { name: "node features".into(), expected: vec![input_dim], found: vec![g.node_dim()] });
    }
    Ok(g.node_feature_block().to_vec())
}

#[derive(Clone, Debug, PartialEq)]
pub struct GnnModel {
    pub cfg: GnnConfig,
    pub params: ParamStore,
}

impl GnnModel {
    /// Glorot-initialized weights, zero biases.
    pub fn init(cfg: GnnConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let mut rng = seed::rng(seed);
        let mut params = ParamStore::new();
        for (name, shape) in cfg.param_shapes() {
            let t = if shape.len() == 1 { Tensor::zeros(&shape) } else { Tensor::glorot(&shape, &mut rng) };
            params.insert(&name, t)?;
        }
        Ok(GnnModel { cfg, params })
    }

    /// Wraps existing parameters after checking every shape.
    pub fn from_params(cfg: GnnConfig, params: ParamStore) -> Result<Self> {
        cfg.validate()?;
        for (name, shape) in cfg.param_shapes() {
            params.expect(&name, &shape)?;
        }
        if params.len() != cfg.param_shapes().len() {
            return Err(Error::InvalidArgument("unexpected extra parameters".into()));
        }
        Ok(GnnModel { cfg, params })
    }

    pub fn zeros_like_params(&self) -> ParamStore {
        self.params.zeros_like()
    }

    fn s2v_encoder(&self) -> Result<S2vEncoder<'_>> {
        let (d, i) = (self.cfg.embed_dim, self.cfg.input_dim);
        Ok(S2vEncoder {
            w_node: self.params.expect("s2v.w_node", &[d, i])?,
            w_msg: self.params.expect("s2v.w_msg", &[d, d])?,
            depth: self.cfg.depth,
        })
    }

    fn s2v_head(&self) -> Result<(&Tensor, &Tensor)> {
        let (d, y) = (self.cfg.embed_dim, self.cfg.num_classes);
        Ok((self.params.expect("s2v.w_out", &[y, d])?, self.params.expect("s2v.b_out", &[y])?))
    }

    fn gcn_weights(&self) -> Result<Vec<&Tensor>> {
        self.cfg.param_shapes().iter().map(|(name, shape)| self.params.expect(name, shape)).collect()
    }

    fn check_target(&self, g: &Graph, node: Option<NodeId>) -> Result<()> {
        match (self.cfg.arch, node) {
            (_, Some(c)) => g.check_node(c),
            (Arch::Gcn, None) => Err(Error::MissingTarget),
            (Arch::S2v, None) => Ok(()),
        }
    }

    /// Graph readout (`node = None`, sum pooling) or node readout.
    fn s2v_readout(&self, mu: &[f64], node: Option<NodeId>) -> Result<Vec<f64>> {
        let d = self.cfg.embed_dim;
        let (w_out, b_out) = self.s2v_head()?;
        let pooled = match node {
            Some(c) => mu[c * d..(c + 1) * d].to_vec(),
            None => pool(mu, d),
        };
        let mut logits = b_out.data().to_vec();
        w_out.matvec_acc(&pooled, &mut logits);
        Ok(logits)
    }

    /// Full forward pass and logits for `node` (or the whole graph).
    pub fn forward(&self, g: &Graph, node: Option<NodeId>) -> Result<(EmbeddingState, Vec<f64>)> {
        self.check_target(g, node)?;
        let x = node_inputs(g, self.cfg.input_dim)?;
        match self.cfg.arch {
            Arch::S2v => {
                let cache = self.s2v_encoder()?.forward(g, &x);
                let logits = self.s2v_readout(cache.final_layer(), node)?;
                Ok((EmbeddingState::S2v(cache), logits))
            }
            Arch::Gcn => {
                let c = node.ok_or(Error::MissingTarget)?;
                let cache = gcn::forward(g, &self.gcn_weights()?, &x, Some(&[c]));
                let logits = cache.logits(0).to_vec();
                Ok((EmbeddingState::Gcn(cache), logits))
            }
        }
    }

    pub fn logits(&self, g: &Graph, node: Option<NodeId>) -> Result<Vec<f64>> {
        Ok(self.forward(g, node)?.1)
    }

    /// Logits for many target nodes of one graph from a single pass.
    pub fn logits_many(&self, g: &Graph, nodes: &[NodeId]) -> Result<Vec<Vec<f64>>> {
        for &c in nodes {
            g.check_node(c)?;
        }
        let x = node_inputs(g, self.cfg.input_dim)?;
        match self.cfg.arch {
            Arch::S2v => {
                let cache = self.s2v_encoder()?.forward(g, &x);
                nodes.iter().map(|&c| self.s2v_readout(cache.final_layer(), Some(c))).collect()
            }
            Arch::Gcn => {
                let cache = gcn::forward(g, &self.gcn_weights()?, &x, Some(nodes));
                let out = &cache.regions[self.cfg.depth];
                Ok(nodes.iter().map(|c| cache.logits(out.binary_search(c).expect("target in output region")).to_vec()).collect())
            }
        }
    }

    pub fn predict(&self, g: &Graph, node: Option<NodeId>) -> Result<Prediction> {
        Ok(Prediction::from_logits(&self.logits(g, node)?))
    }

    pub fn loss(&self, g: &Graph, node: Option<NodeId>, label: usize) -> Result<f64> {
        self.check_label(label)?;
        Ok(cross_entropy(&self.logits(g, node)?, label))
    }

    fn check_label(&self, label: usize) -> Result<()> {
        if label >= self.cfg.num_classes {
            return Err(Error::InvalidArgument(format!("label {label} >= {} classes", self.cfg.num_classes)));
        }
        Ok(())
    }

    /// Logits with every node pair weighted by the dense symmetric
    /// coefficient matrix `alpha` (`n x n`) instead of the adjacency of `g`;
    /// only the node features of `g` are used.
    pub fn logits_alpha(&self, g: &Graph, alpha: &[f64], node: Option<NodeId>) -> Result<Vec<f64>> {
        self.check_target(g, node)?;
        let n = g.num_nodes();
        if alpha.len() != n * n {
            return Err(Error::ShapeMismatch { name: "alpha".into(), expected: vec![n, n], found: vec![alpha.len()] });
        }
        let x = node_inputs(g, self.cfg.input_dim)?;
        match self.cfg.arch {
            Arch::S2v => {
                let cache = self.s2v_encoder()?.forward_alpha(alpha, n, &x);
                self.s2v_readout(cache.final_layer(), node)
            }
            Arch::Gcn => {
                let c = node.ok_or(Error::MissingTarget)?;
                let y = self.cfg.num_classes;
                let all = gcn::forward_alpha(alpha, n, &self.gcn_weights()?, &x);
                Ok(all[c * y..(c + 1) * y].to_vec())
            }
        }
    }

    /// Adds `sum_t weight_t * dL_t/dtheta` to `grads` and returns
    /// `sum_t weight_t * L_t`. All targets refer to nodes of `g` (or to `g`
    /// itself).
    pub fn accumulate_gradients(&self, g: &Graph, targets: &[Target], grads: &mut ParamStore) -> Result<f64> {
        Ok(self.backprop(g, targets, grads)?.0)
    }

    /// Gradient of the loss of one target.
    pub fn param_gradients(&self, g: &Graph, node: Option<NodeId>, label: usize) -> Result<ParamStore> {
        let mut grads = self.params.zeros_like();
        self.accumulate_gradients(g, &[Target { node, label, weight: 1.0 }], &mut grads)?;
        Ok(grads)
    }

    fn backprop(&self, g: &Graph, targets: &[Target], grads: &mut ParamStore) -> Result<(f64, Backprop)> {
        for t in targets {
            self.check_target(g, t.node)?;
            self.check_label(t.label)?;
        }
        let x = node_inputs(g, self.cfg.input_dim)?;
        let (n, d, y) = (g.num_nodes(), self.cfg.embed_dim, self.cfg.num_classes);
        let mut total = 0.0;
        match self.cfg.arch {
            Arch::S2v => {
                let enc = self.s2v_encoder()?;
                let cache = enc.forward(g, &x);
                let mu = cache.final_layer();
                let (w_out, _) = self.s2v_head()?;
                let mut g_out = Tensor::zeros(&[y, d]);
                let mut g_b = Tensor::zeros(&[y]);
                let mut d_mu = vec![0.0; n * d];
                for t in targets {
                    let logits = self.s2v_readout(mu, t.node)?;
                    total += t.weight * cross_entropy(&logits, t.label);
                    let dl = d_logits(&logits, t.label, t.weight);
                    let pooled = match t.node {
                        Some(c) => mu[c * d..(c + 1) * d].to_vec(),
                        None => pool(mu, d),
                    };
                    g_out.add_outer(1.0, &dl, &pooled);
                    crate::params::axpy(1.0, &dl, g_b.data_mut());
                    let mut dp = vec![0.0; d];
                    w_out.matvec_t_acc(&dl, &mut dp);
                    let rows: Vec<NodeId> = match t.node {
                        Some(c) => vec![c],
                        None => (0..n).collect(),
                    };
                    for v in rows {
                        crate::params::axpy(1.0, &dp, &mut d_mu[v * d..(v + 1) * d]);
                    }
                }
                let mut g_node = Tensor::zeros(enc.w_node.shape());
                let mut g_msg = Tensor::zeros(enc.w_msg.shape());
                let back = enc.backward(g, &x, &cache, d_mu, &mut g_node, &mut g_msg);
                add_into(grads, "s2v.w_node", &g_node)?;
                add_into(grads, "s2v.w_msg", &g_msg)?;
                add_into(grads, "s2v.w_out", &g_out)?;
                add_into(grads, "s2v.b_out", &g_b)?;
                Ok((total, Backprop::S2v(cache, back)))
            }
            Arch::Gcn => {
                let weights = self.gcn_weights()?;
                let cache = gcn::forward(g, &weights, &x, None);
                let mut dl_all = vec![0.0; n * y];
                for t in targets {
                    let c = t.node.ok_or(Error::MissingTarget)?;
                    let logits = cache.logits(c);
                    total += t.weight * cross_entropy(logits, t.label);
                    let dl = d_logits(logits, t.label, t.weight);
                    crate::params::axpy(1.0, &dl, &mut dl_all[c * y..(c + 1) * y]);
                }
                let mut gw: Vec<Tensor> = weights.iter().map(|w| Tensor::zeros(w.shape())).collect();
                let d_z = gcn::backward(g, &weights, &cache, dl_all, &mut gw);
                for (k, t) in gw.iter().enumerate() {
                    add_into(grads, &format!("gcn.w{k}"), t)?;
                }
                Ok((total, Backprop::Gcn(cache, d_z)))
            }
        }
    }

    /// `dL/d alpha_uv` at `alpha = A` for every pair inside `nodes` (all
    /// nodes when `None`). Pairs outside the subset are not computed, which
    /// keeps the dense matrix small on large graphs.
    pub fn alpha_gradients(&self, g: &Graph, node: Option<NodeId>, label: usize, nodes: Option<&[NodeId]>) -> Result<AlphaGradients> {
        let mut subset: Vec<NodeId> = match nodes {
            Some(s) => s.to_vec(),
            None => (0..g.num_nodes()).collect(),
        };
        subset.sort_unstable();
        subset.dedup();
        for &v in &subset {
            g.check_node(v)?;
        }
        if subset.len() > self.cfg.alpha_node_limit {
            return Err(Error::AlphaGradientTooLarge { nodes: subset.len(), limit: self.cfg.alpha_node_limit });
        }
        let mut scratch = self.params.zeros_like();
        let (_, bp) = self.backprop(g, &[Target { node, label, weight: 1.0 }], &mut scratch)?;
        let s = subset.len();
        let mut values = vec![0.0; s * s];
        match bp {
            Backprop::S2v(cache, back) => {
                for i in 0..s {
                    for j in i + 1..s {
                        let v = S2vEncoder::alpha_gradient(&cache, &back, subset[i], subset[j]);
                        values[i * s + j] = v;
                        values[j * s + i] = v;
                    }
                }
            }
            Backprop::Gcn(cache, d_z) => {
                let isd: Vec<f64> = subset.iter().map(|&v| gcn::inv_sqrt_degree(g, v)).collect();
                // dL/d deg_i through every normalized entry of row and column i
                let dd: Vec<f64> = subset
                    .iter()
                    .zip(&isd)
                    .map(|(&i, &si)| {
                        let di = 1.0 / (si * si);
                        let mut acc = 0.0;
                        for j in core::iter::once(i).chain(g.neighbors(i).iter().copied()) {
                            let a_hat = si * gcn::inv_sqrt_degree(g, j);
                            let gij =
                                gcn::grad_normalized_adjacency(&cache, &d_z, i, j) + gcn::grad_normalized_adjacency(&cache, &d_z, j, i);
                            acc += gij * a_hat;
                        }
                        -acc / (2.0 * di)
                    })
                    .collect();
                for i in 0..s {
                    for j in i + 1..s {
                        let (u, v) = (subset[i], subset[j]);
                        let direct =
                            gcn::grad_normalized_adjacency(&cache, &d_z, u, v) + gcn::grad_normalized_adjacency(&cache, &d_z, v, u);
                        let val = direct * isd[i] * isd[j] + dd[i] + dd[j];
                        values[i * s + j] = val;
                        values[j * s + i] = val;
                    }
                }
            }
        }
        Ok(AlphaGradients { nodes: subset, values })
    }
}

enum Backprop {
    S2v(S2vCache, s2v::S2vBackward),
    Gcn(GcnCache, Vec<Vec<f64>>),
}

fn pool(mu: &[f64], d: usize) -> Vec<f64> {
    let mut out = vec![0.0; d];
    for row in mu.chunks_exact(d) {
        crate::params::axpy(1.0, row, &mut out);
    }
    out
}

/// `weight * (softmax(logits) - onehot(label))`.
fn d_logits(logits: &[f64], label: usize, weight: f64) -> Vec<f64> {
    let mut p = softmax(logits);
    p[label] -= 1.0;
    p.iter_mut().for_each(|x| *x *= weight);
    p
}

fn add_into(grads: &mut ParamStore, name: &str, t: &Tensor) -> Result<()> {
    let dst = grads.get_mut(name)?;
    if dst.shape() != t.shape() {
        return Err(Error::ShapeMismatch { name: name.into(), expected: t.shape().to_vec(), found: dst.shape().to_vec() });
    }
    crate::params::axpy(1.0, t.data(), dst.data_mut());
    Ok(())
}
