//! Graph convolution with symmetric normalization:
//! `Z^(k+1) = D^-1/2 (A + I) D^-1/2 H^(k) W_k`, `H^(k+1) = relu(Z^(k+1))` on
//! hidden layers, and the last `Z` taken as class logits.
//!
//! Every node row is computed by the same routine whether the pass covers
//! the whole graph or only the receptive field of a few target nodes, so
//! both paths give bit-identical logits.

use alloc::vec;
use alloc::vec::Vec;

use crate::graph::{Graph, NodeId};
use crate::linalg::relu;
use crate::params::{dot, Tensor};

/// Layer activations restricted to nested node regions.
#[derive(Clone, Debug)]
pub struct GcnCache {
    /// `regions[k]` holds the sorted nodes where `H^(k)` / `P^(k)` exist;
    /// `regions[depth]` are the output rows.
    pub regions: Vec<Vec<NodeId>>,
    /// `z[k]`: pre-activations of layer `k + 1` on `regions[k + 1]`.
    pub z: Vec<Vec<f64>>,
    /// `h[k]`: layer inputs `H^(k)` on `regions[k]` (`h[0]` = features).
    pub h: Vec<Vec<f64>>,
    /// `p[k] = H^(k) W_k` on `regions[k]`.
    pub p: Vec<Vec<f64>>,
    pub widths: Vec<usize>,
}

impl GcnCache {
    pub fn logits(&self, i: usize) -> &[f64] {
        let w = *self.widths.last().unwrap();
        &self.z[self.z.len() - 1][i * w..(i + 1) * w]
    }
}

/// `1 / sqrt(deg(v) + 1)`.
pub fn inv_sqrt_degree(g: &Graph, v: NodeId) -> f64 {
    1.0 / libm::sqrt((g.degree(v) + 1) as f64)
}

fn position(region: &[NodeId], v: NodeId) -> usize {
    region.binary_search(&v).expect("node inside receptive field")
}

/// Closed neighborhoods, expanded `depth` times outward from `targets`.
fn receptive_regions(g: &Graph, targets: &[NodeId], depth: usize, full: bool) -> Vec<Vec<NodeId>> {
    let n = g.num_nodes();
    let mut regions = vec![Vec::new(); depth + 1];
    if full {
        regions.iter_mut().for_each(|r| *r = (0..n).collect());
        return regions;
    }
    let mut current: Vec<NodeId> = targets.to_vec();
    current.sort_unstable();
    current.dedup();
    regions[depth] = current.clone();
    let mut mark = vec![false; n];
    current.iter().for_each(|&v| mark[v] = true);
    for k in (0..depth).rev() {
        let mut next = current.clone();
        for &v in &current {
            for &u in g.neighbors(v) {
                if !mark[u] {
                    mark[u] = true;
                    next.push(u);
                }
            }
        }
        next.sort_unstable();
        regions[k] = next.clone();
        current = next;
    }
    regions
}

/// Runs the layers for `targets` (or every node when `targets` is `None`).
/// `weights[k]` is `[out, in]`; `inputs` is the `n x in` feature block.
pub fn forward(g: &Graph, weights: &[&Tensor], inputs: &[f64], targets: Option<&[NodeId]>) -> GcnCache {
    let depth = weights.len();
    let regions = receptive_regions(g, targets.unwrap_or(&[]), depth, targets.is_none());
    let in_dim = weights[0].cols();
    let mut widths = vec![in_dim];
    widths.extend(weights.iter().map(|w| w.rows()));

    let mut h = Vec::with_capacity(depth);
    let mut p = Vec::with_capacity(depth);
    let mut z = Vec::with_capacity(depth);
    let mut current: Vec<f64> = regions[0].iter().flat_map(|&v| inputs[v * in_dim..(v + 1) * in_dim].iter().copied()).collect();
    for k in 0..depth {
        let (w_in, w_out) = (widths[k], widths[k + 1]);
        let region = &regions[k];
        let mut pk = vec![0.0; region.len() * w_out];
        for i in 0..region.len() {
            weights[k].matvec(&current[i * w_in..(i + 1) * w_in], &mut pk[i * w_out..(i + 1) * w_out]);
        }
        let out_region = &regions[k + 1];
        let mut zk = vec![0.0; out_region.len() * w_out];
        for (i, &v) in out_region.iter().enumerate() {
            let row = &mut zk[i * w_out..(i + 1) * w_out];
            let sv = inv_sqrt_degree(g, v);
            let mut add = |u: NodeId| {
                let c = sv * inv_sqrt_degree(g, u);
                let j = position(region, u);
                for (r, x) in row.iter_mut().zip(&pk[j * w_out..(j + 1) * w_out]) {
                    *r += c * x;
                }
            };
            add(v);
            for &u in g.neighbors(v) {
                add(u);
            }
        }
        h.push(current);
        current = if k + 1 < depth { zk.iter().map(|&x| relu(x)).collect() } else { Vec::new() };
        p.push(pk);
        z.push(zk);
    }
    GcnCache { regions, z, h, p, widths }
}

/// Forward pass with dense symmetric pair coefficients `alpha` (`n x n`,
/// zero diagonal) in place of the adjacency. Degrees are `1 + sum_j alpha_ij`.
/// Returns the `n x classes` logits.
pub fn forward_alpha(alpha: &[f64], n: usize, weights: &[&Tensor], inputs: &[f64]) -> Vec<f64> {
    let deg: Vec<f64> = (0..n).map(|i| 1.0 + alpha[i * n..(i + 1) * n].iter().sum::<f64>()).collect();
    let mut current = inputs.to_vec();
    let mut w_in = weights[0].cols();
    for (k, w) in weights.iter().enumerate() {
        let w_out = w.rows();
        let mut pk = vec![0.0; n * w_out];
        for i in 0..n {
            w.matvec(&current[i * w_in..(i + 1) * w_in], &mut pk[i * w_out..(i + 1) * w_out]);
        }
        let mut zk = vec![0.0; n * w_out];
        for v in 0..n {
            for u in 0..n {
                let a = if u == v { 1.0 } else { alpha[v * n + u] };
                if a == 0.0 {
                    continue;
                }
                let c = a / libm::sqrt(deg[u] * deg[v]);
                for o in 0..w_out {
                    zk[v * w_out + o] += c * pk[u * w_out + o];
                }
            }
        }
        current = if k + 1 < weights.len() { zk.iter().map(|&x| relu(x)).collect() } else { zk };
        w_in = w_out;
    }
    current
}

/// Backward pass over a full-graph cache. `d_logits` is `n x classes` and
/// usually sparse. Returns `dZ` per layer (`d_z[k]` pairs with `z[k]`).
pub fn backward(g: &Graph, weights: &[&Tensor], cache: &GcnCache, d_logits: Vec<f64>, grads: &mut [Tensor]) -> Vec<Vec<f64>> {
    let depth = weights.len();
    let n = g.num_nodes();
    debug_assert!(cache.regions.iter().all(|r| r.len() == n));
    let mut d_z = vec![Vec::new(); depth];
    let mut current = d_logits;
    for k in (0..depth).rev() {
        let (w_in, w_out) = (cache.widths[k], cache.widths[k + 1]);
        // z_v = sum_{u in N[v]} c_uv p_u  =>  dp_u = sum_{v in N[u]} c_uv dz_v
        let mut dp = vec![0.0; n * w_out];
        for v in 0..n {
            let dz = &current[v * w_out..(v + 1) * w_out];
            if dz.iter().all(|&x| x == 0.0) {
                continue;
            }
            let sv = inv_sqrt_degree(g, v);
            let mut spread = |u: NodeId| {
                let c = sv * inv_sqrt_degree(g, u);
                for (r, x) in dp[u * w_out..(u + 1) * w_out].iter_mut().zip(dz) {
                    *r += c * x;
                }
            };
            spread(v);
            for &u in g.neighbors(v) {
                spread(u);
            }
        }
        let h = &cache.h[k];
        let mut dh = vec![0.0; n * w_in];
        for u in 0..n {
            let dpu = &dp[u * w_out..(u + 1) * w_out];
            if dpu.iter().all(|&x| x == 0.0) {
                continue;
            }
            grads[k].add_outer(1.0, dpu, &h[u * w_in..(u + 1) * w_in]);
            if k > 0 {
                weights[k].matvec_t_acc(dpu, &mut dh[u * w_in..(u + 1) * w_in]);
            }
        }
        d_z[k] = core::mem::take(&mut current);
        if k > 0 {
            let z_prev = &cache.z[k - 1];
            for (d, &zp) in dh.iter_mut().zip(z_prev) {
                if zp <= 0.0 {
                    *d = 0.0;
                }
            }
            current = dh;
        }
    }
    d_z
}

/// `dL/dA_hat[v][u] = sum_k dZ^(k+1)_v . P^(k)_u` on a full-graph cache.
pub fn grad_normalized_adjacency(cache: &GcnCache, d_z: &[Vec<f64>], v: NodeId, u: NodeId) -> f64 {
    let mut s = 0.0;
    for k in 0..d_z.len() {
        let w = cache.widths[k + 1];
        s += dot(&d_z[k][v * w..(v + 1) * w], &cache.p[k][u * w..(u + 1) * w]);
    }
    s
}
