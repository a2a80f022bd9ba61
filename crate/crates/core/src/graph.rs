//! Immutable undirected graphs.
//!
//! A [`Graph`] is a value: every mutation returns a new graph that shares
//! untouched adjacency rows and feature storage with its parent through
//! reference counting. Attackers branch over candidate modifications and the
//! MDP keeps per-step snapshots, so cheap copies matter more than in-place
//! updates.

use alloc::collections::{BTreeMap, VecDeque};
use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type NodeId = usize;

/// An unordered node pair stored canonically with `u < v`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "(NodeId, NodeId)", try_from = "(NodeId, NodeId)")]
pub struct Edge {
    u: NodeId,
    v: NodeId,
}

impl Edge {
    pub fn new(a: NodeId, b: NodeId) -> Result<Self> {
        match a.cmp(&b) {
            core::cmp::Ordering::Less => Ok(Edge { u: a, v: b }),
            core::cmp::Ordering::Greater => Ok(Edge { u: b, v: a }),
            core::cmp::Ordering::Equal => Err(Error::SelfLoop(a)),
        }
    }

    pub fn u(&self) -> NodeId {
        self.u
    }

    pub fn v(&self) -> NodeId {
        self.v
    }

    pub fn endpoints(&self) -> (NodeId, NodeId) {
        (self.u, self.v)
    }

    pub fn touches(&self, node: NodeId) -> bool {
        self.u == node || self.v == node
    }
}

impl fmt::Debug for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.u, self.v)
    }
}

impl From<Edge> for (NodeId, NodeId) {
    fn from(e: Edge) -> Self {
        (e.u, e.v)
    }
}

impl TryFrom<(NodeId, NodeId)> for Edge {
    type Error = Error;

    fn try_from((a, b): (NodeId, NodeId)) -> Result<Self> {
        Edge::new(a, b)
    }
}

/// Result of a single-edge mutation.
#[derive(Clone, Debug)]
pub struct Mutation {
    pub graph: Graph,
    /// True when the request did not change the edge set (adding an
    /// existing edge or deleting a missing one).
    pub noop: bool,
}

/// Undirected simple graph with optional node and edge features.
///
/// Adjacency rows are sorted. Node features are a dense `num_nodes x
/// node_dim` block; edge features are keyed by canonical edge. Edges created
/// by [`Graph::add_edge`] receive an all-zero feature row.
#[derive(Clone)]
pub struct Graph {
    adj: Arc<Vec<Arc<Vec<NodeId>>>>,
    num_edges: usize,
    node_dim: usize,
    node_features: Arc<Vec<f64>>,
    edge_dim: usize,
    edge_features: Arc<BTreeMap<Edge, Vec<f64>>>,
}

impl Graph {
    /// Graph on `num_nodes` isolated nodes without features.
    pub fn new(num_nodes: usize) -> Self {
        Graph {
            adj: Arc::new(core::iter::repeat_n(Arc::new(Vec::new()), num_nodes).collect()),
            num_edges: 0,
            node_dim: 0,
            node_features: Arc::new(Vec::new()),
            edge_dim: 0,
            edge_features: Arc::new(BTreeMap::new()),
        }
    }

    /// Builds a graph from node pairs. Duplicate pairs collapse into one edge.
    pub fn from_edges<I>(num_nodes: usize, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (NodeId, NodeId)>,
    {
        let mut rows: Vec<Vec<NodeId>> = vec![Vec::new(); num_nodes];
        for (a, b) in pairs {
            check_node(a, num_nodes)?;
            check_node(b, num_nodes)?;
            let e = Edge::new(a, b)?;
            rows[e.u].push(e.v);
            rows[e.v].push(e.u);
        }
        let mut num_edges = 0;
        for row in rows.iter_mut() {
            row.sort_unstable();
            row.dedup();
            num_edges += row.len();
        }
        Ok(Graph { adj: Arc::new(rows.into_iter().map(Arc::new).collect()), num_edges: num_edges / 2, ..Graph::new(0) })
    }

    /// Attaches a dense `num_nodes x dim` feature block (row-major).
    pub fn with_node_features(mut self, dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != dim * self.num_nodes() {
            return Err(Error::InvalidGraph(format!(
                "node feature block has {} values, expected {} x {}",
                data.len(),
                self.num_nodes(),
                dim
            )));
        }
        self.node_dim = dim;
        self.node_features = Arc::new(data);
        Ok(self)
    }

    /// Attaches per-edge features; every edge needs exactly one row.
    pub fn with_edge_features(mut self, dim: usize, rows: BTreeMap<Edge, Vec<f64>>) -> Result<Self> {
        if rows.len() != self.num_edges {
            return Err(Error::InvalidGraph(format!("{} edge feature rows for {} edges", rows.len(), self.num_edges)));
        }
        for (e, row) in &rows {
            if !self.has_edge_unchecked(e.u, e.v) {
                return Err(Error::InvalidGraph(format!("feature row for missing edge {e:?}")));
            }
            if row.len() != dim {
                return Err(Error::InvalidGraph(format!("edge {e:?} has {} features, expected {dim}", row.len())));
            }
        }
        self.edge_dim = dim;
        self.edge_features = Arc::new(rows);
        Ok(self)
    }

    pub fn num_nodes(&self) -> usize {
        self.adj.len()
    }

    pub fn num_edges(&self) -> usize {
        self.num_edges
    }

    pub fn node_dim(&self) -> usize {
        self.node_dim
    }

    pub fn edge_dim(&self) -> usize {
        self.edge_dim
    }

    pub fn node_features(&self, v: NodeId) -> &[f64] {
        &self.node_features[v * self.node_dim..(v + 1) * self.node_dim]
    }

    pub fn node_feature_block(&self) -> &[f64] {
        &self.node_features
    }

    pub fn edge_features(&self, e: &Edge) -> Option<&[f64]> {
        self.edge_features.get(e).map(Vec::as_slice)
    }

    /// Sorted neighbor list of `v`. Panics if `v` is out of range.
    pub fn neighbors(&self, v: NodeId) -> &[NodeId] {
        &self.adj[v]
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.adj[v].len()
    }

    pub fn check_node(&self, v: NodeId) -> Result<()> {
        check_node(v, self.num_nodes())
    }

    pub fn has_edge(&self, a: NodeId, b: NodeId) -> Result<bool> {
        self.check_node(a)?;
        self.check_node(b)?;
        Ok(a != b && self.has_edge_unchecked(a, b))
    }

    pub fn contains(&self, e: &Edge) -> bool {
        e.v < self.num_nodes() && self.has_edge_unchecked(e.u, e.v)
    }

    fn has_edge_unchecked(&self, a: NodeId, b: NodeId) -> bool {
        let (short, other) = if self.adj[a].len() <= self.adj[b].len() { (a, b) } else { (b, a) };
        self.adj[short].binary_search(&other).is_ok()
    }

    /// Canonical edges in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.adj.iter().enumerate().flat_map(|(u, row)| {
            let start = row.partition_point(|&w| w <= u);
            row[start..].iter().map(move |&v| Edge { u, v })
        })
    }

    pub fn add_edge(&self, a: NodeId, b: NodeId) -> Result<Mutation> {
        self.check_node(a)?;
        self.check_node(b)?;
        let e = Edge::new(a, b)?;
        if self.has_edge_unchecked(e.u, e.v) {
            return Ok(Mutation { graph: self.clone(), noop: true });
        }
        Ok(Mutation { graph: self.toggled(&[e]), noop: false })
    }

    pub fn delete_edge(&self, a: NodeId, b: NodeId) -> Result<Mutation> {
        self.check_node(a)?;
        self.check_node(b)?;
        let e = Edge::new(a, b)?;
        if !self.has_edge_unchecked(e.u, e.v) {
            return Ok(Mutation { graph: self.clone(), noop: true });
        }
        Ok(Mutation { graph: self.toggled(&[e]), noop: false })
    }

    /// Flips the existence of `(a, b)`.
    pub fn toggle_edge(&self, a: NodeId, b: NodeId) -> Result<Graph> {
        self.check_node(a)?;
        self.check_node(b)?;
        let e = Edge::new(a, b)?;
        Ok(self.toggled(&[e]))
    }

    /// Flips every pair in `pairs`. Pairs must be in range; a pair listed
    /// twice flips back.
    pub fn toggled(&self, pairs: &[Edge]) -> Graph {
        if pairs.is_empty() {
            return self.clone();
        }
        let mut rows: Vec<Arc<Vec<NodeId>>> = (*self.adj).clone();
        let mut num_edges = self.num_edges;
        let mut edge_features = None::<BTreeMap<Edge, Vec<f64>>>;
        for e in pairs {
            let existed = match rows[e.u].binary_search(&e.v) {
                Ok(i) => {
                    Arc::make_mut(&mut rows[e.u]).remove(i);
                    let j = rows[e.v].binary_search(&e.u).expect("adjacency is symmetric");
                    Arc::make_mut(&mut rows[e.v]).remove(j);
                    num_edges -= 1;
                    true
                }
                Err(i) => {
                    Arc::make_mut(&mut rows[e.u]).insert(i, e.v);
                    let j = rows[e.v].binary_search(&e.u).unwrap_err();
                    Arc::make_mut(&mut rows[e.v]).insert(j, e.u);
                    num_edges += 1;
                    false
                }
            };
            if self.edge_dim > 0 {
                let map = edge_features.get_or_insert_with(|| (*self.edge_features).clone());
                if existed {
                    map.remove(e);
                } else {
                    map.insert(*e, vec![0.0; self.edge_dim]);
                }
            }
        }
        Graph {
            adj: Arc::new(rows),
            num_edges,
            node_dim: self.node_dim,
            node_features: Arc::clone(&self.node_features),
            edge_dim: self.edge_dim,
            edge_features: edge_features.map(Arc::new).unwrap_or_else(|| Arc::clone(&self.edge_features)),
        }
    }

    /// Copy of the graph keeping only edges for which `keep` returns true.
    pub fn retain_edges<F: FnMut(&Edge) -> bool>(&self, mut keep: F) -> Graph {
        let dropped: Vec<Edge> = self.edges().filter(|e| !keep(e)).collect();
        self.toggled(&dropped)
    }

    /// Edge sets of `self` and `other` that differ: `(E - E') ∪ (E' - E)`.
    pub fn symmetric_difference(&self, other: &Graph) -> Vec<Edge> {
        let mut out = Vec::new();
        for u in 0..self.num_nodes().min(other.num_nodes()) {
            let (a, b) = (&self.adj[u], &other.adj[u]);
            if Arc::ptr_eq(a, b) {
                continue;
            }
            let (mut i, mut j) = (a.partition_point(|&w| w <= u), b.partition_point(|&w| w <= u));
            while i < a.len() || j < b.len() {
                match (a.get(i), b.get(j)) {
                    (Some(&x), Some(&y)) if x == y => {
                        i += 1;
                        j += 1;
                    }
                    (Some(&x), Some(&y)) if x < y => {
                        out.push(Edge { u, v: x });
                        i += 1;
                    }
                    (Some(_), Some(&y)) => {
                        out.push(Edge { u, v: y });
                        j += 1;
                    }
                    (Some(&x), None) => {
                        out.push(Edge { u, v: x });
                        i += 1;
                    }
                    (None, Some(&y)) => {
                        out.push(Edge { u, v: y });
                        j += 1;
                    }
                    (None, None) => unreachable!(),
                }
            }
        }
        out
    }

    /// BFS hop counts from `source`; `None` marks unreachable nodes.
    pub fn distances_from(&self, source: NodeId) -> Result<Vec<Option<usize>>> {
        self.check_node(source)?;
        Ok(self.bounded_bfs(source, usize::MAX))
    }

    fn bounded_bfs(&self, source: NodeId, limit: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.num_nodes()];
        dist[source] = Some(0);
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].unwrap();
            if du == limit {
                continue;
            }
            for &w in self.neighbors(u) {
                if dist[w].is_none() {
                    dist[w] = Some(du + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// Hop distance between `u` and `v`, or `None` when disconnected.
    pub fn shortest_hop_distance(&self, u: NodeId, v: NodeId) -> Result<Option<usize>> {
        self.check_node(u)?;
        self.check_node(v)?;
        if u == v {
            return Ok(Some(0));
        }
        Ok(self.bounded_bfs(u, usize::MAX)[v])
    }

    /// Sorted ids of all nodes within `b` hops of `c`, `c` included.
    pub fn b_hop_neighborhood(&self, c: NodeId, b: usize) -> Result<Vec<NodeId>> {
        self.check_node(c)?;
        let dist = self.bounded_bfs(c, b);
        Ok((0..self.num_nodes()).filter(|&v| dist[v].is_some()).collect())
    }

    /// Component id per node, numbered by first appearance.
    pub fn component_labels(&self) -> Vec<usize> {
        let n = self.num_nodes();
        let mut uf = UnionFind::new(n);
        for e in self.edges() {
            uf.union(e.u, e.v);
        }
        let mut ids = vec![usize::MAX; n];
        let mut labels = vec![0; n];
        let mut next = 0;
        for v in 0..n {
            let root = uf.find(v);
            if ids[root] == usize::MAX {
                ids[root] = next;
                next += 1;
            }
            labels[v] = ids[root];
        }
        labels
    }

    /// Number of connected components (union-find). This is the gold
    /// classifier of the component-counting task.
    pub fn connected_components(&self) -> usize {
        let mut uf = UnionFind::new(self.num_nodes());
        for e in self.edges() {
            uf.union(e.u, e.v);
        }
        uf.count()
    }

    /// Edges whose deletion disconnects their endpoints, sorted.
    pub fn bridges(&self) -> Vec<Edge> {
        let n = self.num_nodes();
        let mut tin = vec![usize::MAX; n];
        let mut low = vec![0; n];
        let mut timer = 0;
        let mut out = Vec::new();
        for s in 0..n {
            if tin[s] != usize::MAX {
                continue;
            }
            tin[s] = timer;
            low[s] = timer;
            timer += 1;
            // (node, parent, next neighbor index)
            let mut stack = vec![(s, usize::MAX, 0usize)];
            while let Some(top) = stack.last_mut() {
                let (v, parent, i) = *top;
                if let Some(&w) = self.neighbors(v).get(i) {
                    top.2 += 1;
                    if w == parent {
                        continue;
                    }
                    if tin[w] == usize::MAX {
                        tin[w] = timer;
                        low[w] = timer;
                        timer += 1;
                        stack.push((w, v, 0));
                    } else {
                        low[v] = low[v].min(tin[w]);
                    }
                } else {
                    stack.pop();
                    if parent != usize::MAX {
                        low[parent] = low[parent].min(low[v]);
                        if low[v] > tin[parent] {
                            out.push(Edge::new(parent, v).expect("tree edge"));
                        }
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Induced subgraph on `nodes` (sorted, deduplicated).
    pub fn induced(&self, nodes: &[NodeId]) -> Subgraph {
        debug_assert!(nodes.windows(2).all(|w| w[0] < w[1]));
        let adj = nodes.iter().map(|&v| self.neighbors(v).iter().filter_map(|w| nodes.binary_search(w).ok()).collect()).collect();
        Subgraph { nodes: nodes.to_vec(), adj }
    }
}

impl PartialEq for Graph {
    fn eq(&self, other: &Self) -> bool {
        self.num_edges == other.num_edges
            && self.node_dim == other.node_dim
            && self.edge_dim == other.edge_dim
            && self.adj == other.adj
            && self.node_features == other.node_features
            && self.edge_features == other.edge_features
    }
}

impl fmt::Debug for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Graph")
            .field("num_nodes", &self.num_nodes())
            .field("edges", &self.edges().collect::<Vec<_>>())
            .field("node_dim", &self.node_dim)
            .field("edge_dim", &self.edge_dim)
            .finish()
    }
}

fn check_node(v: NodeId, n: usize) -> Result<()> {
    if v < n {
        Ok(())
    } else {
        Err(Error::NodeOutOfRange { node: v, num_nodes: n })
    }
}

/// Node-induced subgraph with local indices; `nodes[i]` is the global id of
/// local node `i`.
#[derive(Clone, Debug)]
pub struct Subgraph {
    pub nodes: Vec<NodeId>,
    pub adj: Vec<Vec<usize>>,
}

impl Subgraph {
    pub fn local(&self, global: NodeId) -> Option<usize> {
        self.nodes.binary_search(&global).ok()
    }
}

/// Adjacency access shared by [`Graph`] and [`Subgraph`] so message passing
/// can run on either.
pub trait Adjacency {
    fn node_count(&self) -> usize;
    fn neighbors_of(&self, v: usize) -> &[usize];
}

impl Adjacency for Graph {
    fn node_count(&self) -> usize {
        self.num_nodes()
    }

    fn neighbors_of(&self, v: usize) -> &[usize] {
        self.neighbors(v)
    }
}

impl Adjacency for Subgraph {
    fn node_count(&self) -> usize {
        self.nodes.len()
    }

    fn neighbors_of(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }
}

/// Disjoint sets with path halving and union by size.
#[derive(Clone, Debug)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
    sets: usize,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect(), size: vec![1; n], sets: n }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns true when `a` and `b` were in different sets.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            core::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        self.sets -= 1;
        true
    }

    pub fn count(&self) -> usize {
        self.sets
    }
}
