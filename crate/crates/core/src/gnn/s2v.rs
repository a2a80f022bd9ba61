//! structure2vec message passing:
//! `mu_v^(k) = relu(W_node x_v + W_msg * sum_{u in N(v)} mu_u^(k-1))`, with
//! `mu^(0) = 0`.

use alloc::vec;
use alloc::vec::Vec;

use crate::graph::Adjacency;
use crate::linalg::relu;
use crate::params::{dot, Tensor};

/// Borrowed S2V weights: `w_node` is `[d, in]`, `w_msg` is `[d, d]`.
#[derive(Clone, Copy)]
pub struct S2vEncoder<'p> {
    pub w_node: &'p Tensor,
    pub w_msg: &'p Tensor,
    pub depth: usize,
}

/// Per-layer activations kept for backpropagation. Layer `k` arrays are
/// `n x d`, row-major.
#[derive(Clone, Debug)]
pub struct S2vCache {
    pub n: usize,
    pub dim: usize,
    /// `W_node x_v`, shared by every layer.
    pub base: Vec<f64>,
    /// `mu[k]` for `k = 0..=depth`; `mu[0]` is all zeros.
    pub mu: Vec<Vec<f64>>,
    /// Neighbor sums feeding layer `k` (index `k - 1`).
    pub agg: Vec<Vec<f64>>,
    /// Pre-activations of layer `k` (index `k - 1`).
    pub pre: Vec<Vec<f64>>,
}

impl S2vCache {
    pub fn embedding(&self, v: usize) -> &[f64] {
        &self.mu[self.mu.len() - 1][v * self.dim..(v + 1) * self.dim]
    }

    pub fn final_layer(&self) -> &[f64] {
        &self.mu[self.mu.len() - 1]
    }
}

/// Gradients produced by [`S2vEncoder::backward`].
#[derive(Clone, Debug)]
pub struct S2vBackward {
    /// `dL/d(agg_v)` per layer (index `k - 1`), i.e. `W_msg^T delta_v^(k)`.
    pub d_agg: Vec<Vec<f64>>,
}

impl<'p> S2vEncoder<'p> {
    pub fn dim(&self) -> usize {
        self.w_msg.rows()
    }

    pub fn forward<A: Adjacency + ?Sized>(&self, adj: &A, inputs: &[f64]) -> S2vCache {
        self.forward_with(inputs, adj.node_count(), |mu, v, out| {
            let d = out.len();
            for &u in adj.neighbors_of(v) {
                for (o, x) in out.iter_mut().zip(&mu[u * d..(u + 1) * d]) {
                    *o += x;
                }
            }
        })
    }

    /// Forward pass with a coefficient on every ordered pair: the message
    /// sum becomes `sum_u alpha[u * n + v] * mu_u`. With `alpha` equal to the
    /// adjacency indicator this reproduces [`S2vEncoder::forward`].
    pub fn forward_alpha(&self, alpha: &[f64], n: usize, inputs: &[f64]) -> S2vCache {
        debug_assert_eq!(alpha.len(), n * n);
        self.forward_with(inputs, n, |mu, v, out| {
            let d = out.len();
            for u in 0..n {
                let a = alpha[u * n + v];
                if a != 0.0 {
                    for (o, x) in out.iter_mut().zip(&mu[u * d..(u + 1) * d]) {
                        *o += a * x;
                    }
                }
            }
        })
    }

    fn forward_with<F>(&self, inputs: &[f64], n: usize, aggregate: F) -> S2vCache
    where
        F: Fn(&[f64], usize, &mut [f64]),
    {
        let d = self.dim();
        let in_dim = self.w_node.cols();
        let mut base = vec![0.0; n * d];
        for v in 0..n {
            self.w_node.matvec(&inputs[v * in_dim..(v + 1) * in_dim], &mut base[v * d..(v + 1) * d]);
        }
        let mut mu = Vec::with_capacity(self.depth + 1);
        mu.push(vec![0.0; n * d]);
        let mut aggs = Vec::with_capacity(self.depth);
        let mut pres = Vec::with_capacity(self.depth);
        for _ in 0..self.depth {
            let prev = mu.last().unwrap();
            let mut agg = vec![0.0; n * d];
            for v in 0..n {
                aggregate(prev, v, &mut agg[v * d..(v + 1) * d]);
            }
            let mut pre = base.clone();
            for v in 0..n {
                self.w_msg.matvec_acc(&agg[v * d..(v + 1) * d], &mut pre[v * d..(v + 1) * d]);
            }
            mu.push(pre.iter().map(|&x| relu(x)).collect());
            aggs.push(agg);
            pres.push(pre);
        }
        S2vCache { n, dim: d, base, mu, agg: aggs, pre: pres }
    }

    /// Backpropagates `d_mu` (gradient w.r.t. the final embeddings, `n x d`)
    /// into `g_node` / `g_msg`.
    pub fn backward<A: Adjacency + ?Sized>(
        &self,
        adj: &A,
        inputs: &[f64],
        cache: &S2vCache,
        mut d_mu: Vec<f64>,
        g_node: &mut Tensor,
        g_msg: &mut Tensor,
    ) -> S2vBackward {
        let (n, d) = (cache.n, cache.dim);
        let in_dim = self.w_node.cols();
        let mut d_agg_layers = vec![Vec::new(); self.depth];
        for k in (0..self.depth).rev() {
            let pre = &cache.pre[k];
            let agg = &cache.agg[k];
            let mut delta = d_mu;
            for (dl, &p) in delta.iter_mut().zip(pre) {
                if p <= 0.0 {
                    *dl = 0.0;
                }
            }
            let mut d_agg = vec![0.0; n * d];
            for v in 0..n {
                let dv = &delta[v * d..(v + 1) * d];
                if dv.iter().all(|&x| x == 0.0) {
                    continue;
                }
                g_node.add_outer(1.0, dv, &inputs[v * in_dim..(v + 1) * in_dim]);
                g_msg.add_outer(1.0, dv, &agg[v * d..(v + 1) * d]);
                self.w_msg.matvec_t_acc(dv, &mut d_agg[v * d..(v + 1) * d]);
            }
            // agg_v = sum_{u in N(v)} mu_u  =>  d mu_u += sum_{v in N(u)} d_agg_v
            let mut d_prev = vec![0.0; n * d];
            if k > 0 {
                for u in 0..n {
                    let row = &mut d_prev[u * d..(u + 1) * d];
                    for &v in adj.neighbors_of(u) {
                        for (r, x) in row.iter_mut().zip(&d_agg[v * d..(v + 1) * d]) {
                            *r += x;
                        }
                    }
                }
            }
            d_agg_layers[k] = d_agg;
            d_mu = d_prev;
        }
        S2vBackward { d_agg: d_agg_layers }
    }

    /// `dL/d alpha_{uv}` for one unordered pair, from the cached forward
    /// pass and the backward message gradients:
    /// `sum_k d_agg_v^(k) . mu_u^(k-1) + d_agg_u^(k) . mu_v^(k-1)`.
    pub fn alpha_gradient(cache: &S2vCache, back: &S2vBackward, u: usize, v: usize) -> f64 {
        let d = cache.dim;
        let mut g = 0.0;
        for k in 0..back.d_agg.len() {
            let mu = &cache.mu[k];
            let da = &back.d_agg[k];
            g += dot(&da[v * d..(v + 1) * d], &mu[u * d..(u + 1) * d]);
            g += dot(&da[u * d..(u + 1) * d], &mu[v * d..(v + 1) * d]);
        }
        g
    }
}
