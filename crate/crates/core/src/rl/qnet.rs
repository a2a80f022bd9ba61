//! S2V-parameterized Q-functions for the two decision levels.
//!
//! `Q1(s, a1) = w_out · relu(W_hidden [mu_a1, mu(s)] + b_hidden) + b_out` and
//! `Q2(s, a1, a2)` likewise over `[mu_a1, mu_a2, mu(s), edge(a1, a2), a1 == a2]`.
//! Each level owns its own S2V encoder over the current graph. Node inputs are
//! `[1, v == c, features(v)]`.

use core::cell::Cell;

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gnn::S2vCache;
use crate::gnn::S2vEncoder;
use crate::graph::{Graph, NodeId, Subgraph};
use crate::params::{dot, ParamStore, Tensor};
use crate::rl::mdp::{closure, MdpState};
use crate::seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QConfig {
    /// S2V propagation depth `K`.
    pub depth: usize,
    pub embed_dim: usize,
    pub hidden_dim: usize,
    /// Node feature width of the attacked graphs.
    pub feature_dim: usize,
    /// State embedding is `[sum over ball, mu_c]` instead of a global sum.
    pub node_task: bool,
}

impl QConfig {
    pub fn graph_task(depth: usize, embed_dim: usize) -> Self {
        QConfig { depth, embed_dim, hidden_dim: embed_dim, feature_dim: 0, node_task: false }
    }

    pub fn node_task(depth: usize, embed_dim: usize, feature_dim: usize) -> Self {
        QConfig { depth, embed_dim, hidden_dim: embed_dim, feature_dim, node_task: true }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=5).contains(&self.depth) || self.embed_dim == 0 || self.hidden_dim == 0 {
            return Err(Error::InvalidArgument(format!("agent needs depth in 1..=5 and positive widths, got {self:?}")));
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        2 + self.feature_dim
    }

    fn state_dim(&self) -> usize {
        if self.node_task {
            2 * self.embed_dim
        } else {
            self.embed_dim
        }
    }

    /// Width of the hidden layer input for a level.
    fn concat_dim(&self, level: Level) -> usize {
        match level {
            Level::First => self.embed_dim + self.state_dim(),
            Level::Second => 2 * self.embed_dim + self.state_dim() + 2,
        }
    }

    pub fn param_shapes(&self) -> Vec<(String, Vec<usize>)> {
        let (d, h) = (self.embed_dim, self.hidden_dim);
        let mut out = Vec::new();
        for level in [Level::First, Level::Second] {
            let p = level.prefix();
            out.push((format!("{p}.w_node"), vec![d, self.input_dim()]));
            out.push((format!("{p}.w_msg"), vec![d, d]));
            out.push((format!("{p}.w_hidden"), vec![h, self.concat_dim(level)]));
            out.push((format!("{p}.b_hidden"), vec![h]));
            out.push((format!("{p}.w_out"), vec![1, h]));
            out.push((format!("{p}.b_out"), vec![1]));
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Level {
    First,
    Second,
}

impl Level {
    fn prefix(&self) -> &'static str {
        match self {
            Level::First => "q1",
            Level::Second => "q2",
        }
    }
}

/// One level's S2V pass over the part of the current graph the scores can
/// depend on.
#[derive(Clone, Debug)]
pub struct Frame {
    level: Level,
    sub: Subgraph,
    inputs: Vec<f64>,
    cache: S2vCache,
    pooled: Vec<usize>,
    target: Option<usize>,
    state: Vec<f64>,
}

impl Frame {
    pub fn mu(&self, v: NodeId) -> &[f64] {
        self.cache.embedding(self.sub.local(v).expect("node outside frame"))
    }

    pub fn state_embedding(&self) -> &[f64] {
        &self.state
    }
}

/// `Q1` and `Q2` parameters with evaluation counters.
#[derive(Clone, Debug)]
pub struct QNetworks {
    pub cfg: QConfig,
    pub params: ParamStore,
    q1_evals: Cell<u64>,
    q2_evals: Cell<u64>,
}

impl PartialEq for QNetworks {
    fn eq(&self, other: &Self) -> bool {
        self.cfg == other.cfg && self.params == other.params
    }
}

struct Head<'p> {
    encoder: S2vEncoder<'p>,
    w_hidden: &'p Tensor,
    b_hidden: &'p Tensor,
    w_out: &'p Tensor,
    b_out: f64,
}

impl QNetworks {
    pub fn init(cfg: QConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let mut rng = seed::rng(seed);
        let mut params = ParamStore::new();
        for (name, shape) in cfg.param_shapes() {
            let t = if shape.len() == 1 { Tensor::zeros(&shape) } else { Tensor::glorot(&shape, &mut rng) };
            params.insert(&name, t)?;
        }
        Ok(Self::wrap(cfg, params))
    }

    pub fn from_params(cfg: QConfig, params: ParamStore) -> Result<Self> {
        cfg.validate()?;
        let shapes = cfg.param_shapes();
        for (name, shape) in &shapes {
            params.expect(name, shape)?;
        }
        if params.len() != shapes.len() {
            return Err(Error::InvalidArgument(format!("agent checkpoint has {} tensors, expected {}", params.len(), shapes.len())));
        }
        Ok(Self::wrap(cfg, params))
    }

    fn wrap(cfg: QConfig, params: ParamStore) -> Self {
        QNetworks { cfg, params, q1_evals: Cell::new(0), q2_evals: Cell::new(0) }
    }

    /// Node-score evaluations so far at each level.
    pub fn evals(&self) -> (u64, u64) {
        (self.q1_evals.get(), self.q2_evals.get())
    }

    pub fn reset_evals(&self) {
        self.q1_evals.set(0);
        self.q2_evals.set(0);
    }

    fn head(&self, level: Level) -> Head<'_> {
        let p = level.prefix();
        let get = |n: &str| self.params.get(&format!("{p}.{n}")).expect("shapes checked at construction");
        Head {
            encoder: S2vEncoder { w_node: get("w_node"), w_msg: get("w_msg"), depth: self.cfg.depth },
            w_hidden: get("w_hidden"),
            b_hidden: get("b_hidden"),
            w_out: get("w_out"),
            b_out: get("b_out").data()[0],
        }
    }

    /// S2V pass for one level on the current graph of `s`.
    pub fn frame(&self, s: &MdpState<'_>, level: Level) -> Result<Frame> {
        let g = s.graph();
        if g.node_dim() != self.cfg.feature_dim {
            return Err(Error::ShapeMismatch {
                name: "agent node features".into(),
                expected: vec![self.cfg.feature_dim],
                found: vec![g.node_dim()],
            });
        }
        if self.cfg.node_task != s.target().is_some() {
            return Err(Error::TaskMismatch("agent task does not match the instance".into()));
        }
        let pooled = s.pooled();
        let nodes = match s.target() {
            None => (0..g.num_nodes()).collect(),
            Some(_) => {
                let mut seeds = s.scored();
                seeds.extend_from_slice(&pooled);
                seeds.sort_unstable();
                seeds.dedup();
                closure(g, &seeds, self.cfg.depth)
            }
        };
        let sub = g.induced(&nodes);
        let inputs = agent_inputs(g, &sub.nodes, s.target(), self.cfg.input_dim());
        let cache = self.head(level).encoder.forward(&sub, &inputs);
        let pooled: Vec<usize> = pooled.iter().map(|&v| sub.local(v).expect("pooled node in frame")).collect();
        let target = s.target().map(|c| sub.local(c).expect("target in frame"));
        let d = self.cfg.embed_dim;
        let mut state = vec![0.0; d];
        let scale = 1.0 / pooled.len().max(1) as f64;
        for &i in &pooled {
            for (o, x) in state.iter_mut().zip(cache.embedding(i)) {
                *o += scale * x;
            }
        }
        if let Some(c) = target {
            state.extend_from_slice(cache.embedding(c));
        }
        Ok(Frame { level, sub, inputs, cache, pooled, target, state })
    }

    /// `W_hidden[:, state block] mu(s) + b_hidden` plus any fixed blocks.
    fn hidden_base(&self, head: &Head<'_>, frame: &Frame, first: Option<NodeId>) -> Vec<f64> {
        let d = self.cfg.embed_dim;
        let state_off = match frame.level {
            Level::First => d,
            Level::Second => 2 * d,
        };
        let mut base = head.b_hidden.data().to_vec();
        for (r, b) in base.iter_mut().enumerate() {
            let row = head.w_hidden.row(r);
            *b += dot(&row[state_off..state_off + frame.state.len()], &frame.state);
            if let Some(a1) = first {
                *b += dot(&row[..d], frame.mu(a1));
            }
        }
        base
    }

    /// Score of one node given the precomputed base: `extra` fills the
    /// trailing `[edge, noop]` inputs of the second level.
    fn score(&self, head: &Head<'_>, base: &[f64], off: usize, mu: &[f64], extra: Option<[f64; 2]>) -> f64 {
        let d = self.cfg.embed_dim;
        let tail = self.cfg.concat_dim(Level::Second) - 2;
        let mut q = head.b_out;
        for (r, &b) in base.iter().enumerate() {
            let row = head.w_hidden.row(r);
            let mut z = b + dot(&row[off..off + d], mu);
            if let Some([e, n]) = extra {
                z += row[tail] * e + row[tail + 1] * n;
            }
            if z > 0.0 {
                q += head.w_out.data()[r] * z;
            }
        }
        q
    }

    /// `Q1` for every node; nodes that are not valid first endpoints get
    /// `-inf`. Every node of `s.scored()` is evaluated once.
    pub fn q1_scores_with(&self, frame: &Frame, s: &MdpState<'_>) -> Vec<f64> {
        let head = self.head(Level::First);
        let base = self.hidden_base(&head, frame, None);
        let scored = s.scored();
        let raw: Vec<f64> = scored.iter().map(|&v| self.score(&head, &base, 0, frame.mu(v), None)).collect();
        self.q1_evals.set(self.q1_evals.get() + scored.len() as u64);
        masked(s.graph().num_nodes(), &scored, &raw, &s.firsts())
    }

    /// `Q2(s, first, ·)` for every node; invalid second endpoints get `-inf`.
    pub fn q2_scores_with(&self, frame: &Frame, s: &MdpState<'_>, first: NodeId) -> Vec<f64> {
        let head = self.head(Level::Second);
        let base = self.hidden_base(&head, frame, Some(first));
        let scored = s.scored();
        let raw: Vec<f64> = scored
            .iter()
            .map(|&v| {
                let edge = s.graph().has_edge(first, v).unwrap_or(false);
                let extra = [edge as u8 as f64, (v == first) as u8 as f64];
                self.score(&head, &base, self.cfg.embed_dim, frame.mu(v), Some(extra))
            })
            .collect();
        self.q2_evals.set(self.q2_evals.get() + scored.len() as u64);
        masked(s.graph().num_nodes(), &scored, &raw, &s.seconds(first))
    }

    pub fn q1_scores(&self, s: &MdpState<'_>) -> Result<Vec<f64>> {
        Ok(self.q1_scores_with(&self.frame(s, Level::First)?, s))
    }

    pub fn q2_scores(&self, s: &MdpState<'_>, first: NodeId) -> Result<Vec<f64>> {
        s.graph().check_node(first)?;
        Ok(self.q2_scores_with(&self.frame(s, Level::Second)?, s, first))
    }

    /// Adds `d_q * dQ/dtheta` for one scored action to `grads` and returns
    /// the Q value. `second` selects the second level.
    pub fn accumulate(&self, s: &MdpState<'_>, first: NodeId, second: Option<NodeId>, target: f64, grads: &mut ParamStore) -> Result<f64> {
        let level = if second.is_some() { Level::Second } else { Level::First };
        let frame = self.frame(s, level)?;
        let head = self.head(level);
        let d = self.cfg.embed_dim;
        // hidden input
        let mut x = Vec::with_capacity(self.cfg.concat_dim(level));
        x.extend_from_slice(frame.mu(first));
        if let Some(v) = second {
            x.extend_from_slice(frame.mu(v));
        }
        x.extend_from_slice(&frame.state);
        if let Some(v) = second {
            x.push(s.graph().has_edge(first, v)? as u8 as f64);
            x.push((v == first) as u8 as f64);
        }
        let h_dim = self.cfg.hidden_dim;
        let mut z = head.b_hidden.data().to_vec();
        head.w_hidden.matvec_acc(&x, &mut z);
        let q = head.b_out + z.iter().zip(head.w_out.data()).map(|(&zi, w)| if zi > 0.0 { zi * w } else { 0.0 }).sum::<f64>();
        let dq = q - target;
        let dz: Vec<f64> = (0..h_dim).map(|r| if z[r] > 0.0 { dq * head.w_out.data()[r] } else { 0.0 }).collect();
        let hidden: Vec<f64> = z.iter().map(|&zi| zi.max(0.0)).collect();
        let p = level.prefix();
        let mut dx = vec![0.0; x.len()];
        head.w_hidden.matvec_t_acc(&dz, &mut dx);
        grads.get_mut(&format!("{p}.w_out"))?.add_outer(1.0, &[dq], &hidden);
        grads.get_mut(&format!("{p}.b_out"))?.data_mut()[0] += dq;
        grads.get_mut(&format!("{p}.w_hidden"))?.add_outer(1.0, &dz, &x);
        for (g, v) in grads.get_mut(&format!("{p}.b_hidden"))?.data_mut().iter_mut().zip(&dz) {
            *g += v;
        }

        // back into node embeddings
        let n_local = frame.sub.nodes.len();
        let mut d_mu = vec![0.0; n_local * d];
        let mut add = |local: usize, src: &[f64]| {
            for (o, v) in d_mu[local * d..(local + 1) * d].iter_mut().zip(src) {
                *o += v;
            }
        };
        add(frame.sub.local(first).expect("first in frame"), &dx[..d]);
        let mut off = d;
        if let Some(v) = second {
            add(frame.sub.local(v).expect("second in frame"), &dx[d..2 * d]);
            off += d;
        }
        let scale = 1.0 / frame.pooled.len().max(1) as f64;
        let d_state: Vec<f64> = dx[off..off + d].iter().map(|v| scale * v).collect();
        for &i in &frame.pooled {
            add(i, &d_state);
        }
        if let Some(c) = frame.target {
            add(c, &dx[off + d..off + 2 * d]);
        }
        let (g_node, g_msg) = pair_mut(grads, &format!("{p}.w_node"), &format!("{p}.w_msg"))?;
        head.encoder.backward(&frame.sub, &frame.inputs, &frame.cache, d_mu, g_node, g_msg);
        Ok(q)
    }
}

fn masked(n: usize, scored: &[NodeId], raw: &[f64], valid: &[NodeId]) -> Vec<f64> {
    let mut out = vec![f64::NEG_INFINITY; n];
    for (&v, &q) in scored.iter().zip(raw) {
        if valid.binary_search(&v).is_ok() {
            out[v] = q;
        }
    }
    out
}

fn pair_mut<'a>(store: &'a mut ParamStore, a: &str, b: &str) -> Result<(&'a mut Tensor, &'a mut Tensor)> {
    let mut first = None;
    let mut second = None;
    for (name, t) in store.iter_mut() {
        if name == a {
            first = Some(t);
        } else if name == b {
            second = Some(t);
        }
    }
    match (first, second) {
        (Some(x), Some(y)) => Ok((x, y)),
        _ => Err(Error::MissingParam(format!("{a} / {b}"))),
    }
}

/// `[1, v == c, features(v)]` for each listed node, row-major.
pub fn agent_inputs(g: &Graph, nodes: &[NodeId], target: Option<NodeId>, input_dim: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(nodes.len() * input_dim);
    for &v in nodes {
        out.push(1.0);
        out.push((Some(v) == target) as u8 as f64);
        out.extend_from_slice(g.node_features(v));
    }
    out
}
