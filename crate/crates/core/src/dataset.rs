//! Datasets and synthetic generators.
//!
//! Two generators back the experiments:
//!
//! - [`gen_component_dataset`]: inductive graph classification where the
//!   label is the number of connected components (1, 2 or 3). Each graph is
//!   a disjoint union of Erdős–Rényi blobs, each blob resampled until it is
//!   internally connected.
//! - [`gen_node_dataset`]: a single stochastic-block-model graph with sparse
//!   binary node features, for transductive node classification.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::seed::{self, Rng};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    InductiveGraph,
    TransductiveNode,
}

/// `(graph, target node, label)`; the graph is an index into
/// [`Dataset::graphs`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataInstance {
    pub graph: usize,
    pub target: Option<NodeId>,
    pub label: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Splits {
    pub train: Vec<usize>,
    pub test_i: Vec<usize>,
    pub test_ii: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitName {
    Train,
    TestI,
    TestIi,
}

impl SplitName {
    pub const ALL: [SplitName; 3] = [SplitName::Train, SplitName::TestI, SplitName::TestIi];

    pub fn as_str(&self) -> &'static str {
        match self {
            SplitName::Train => "train",
            SplitName::TestI => "test_I",
            SplitName::TestIi => "test_II",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "train" => Some(SplitName::Train),
            "test_I" | "test_i" | "test1" => Some(SplitName::TestI),
            "test_II" | "test_ii" | "test2" => Some(SplitName::TestIi),
            _ => None,
        }
    }
}

impl Splits {
    pub fn get(&self, name: SplitName) -> &[usize] {
        match name {
            SplitName::Train => &self.train,
            SplitName::TestI => &self.test_i,
            SplitName::TestIi => &self.test_ii,
        }
    }

    pub fn get_mut(&mut self, name: SplitName) -> &mut Vec<usize> {
        match name {
            SplitName::Train => &mut self.train,
            SplitName::TestI => &mut self.test_i,
            SplitName::TestIi => &mut self.test_ii,
        }
    }
}

/// Requested split sizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSizes {
    pub train: usize,
    pub test_i: usize,
    pub test_ii: usize,
}

impl SplitSizes {
    pub fn total(&self) -> usize {
        self.train + self.test_i + self.test_ii
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub task: Task,
    pub graphs: Vec<Graph>,
    pub instances: Vec<DataInstance>,
    pub splits: Splits,
    pub num_classes: usize,
    /// Added to class ids when labels are shown to people; the component
    /// task uses 1 so class 0 reads as "1 component".
    pub label_base: usize,
}

impl Dataset {
    pub fn graph_of(&self, instance: &DataInstance) -> &Graph {
        &self.graphs[instance.graph]
    }

    pub fn split(&self, name: SplitName) -> impl Iterator<Item = (usize, &DataInstance)> + '_ {
        self.splits.get(name).iter().map(move |&i| (i, &self.instances[i]))
    }

    /// Checks every structural invariant of the dataset.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: alloc::string::String| Err(Error::InvalidArgument(msg));
        for (i, inst) in self.instances.iter().enumerate() {
            if inst.graph >= self.graphs.len() {
                return bad(format!("instance {i} references missing graph {}", inst.graph));
            }
            if inst.label >= self.num_classes {
                return bad(format!("instance {i} label {} >= {}", inst.label, self.num_classes));
            }
            match (self.task, inst.target) {
                (Task::InductiveGraph, Some(_)) => return bad(format!("instance {i} has a target node in a graph task")),
                (Task::TransductiveNode, None) => return bad(format!("instance {i} lacks a target node")),
                (Task::TransductiveNode, Some(c)) => self.graphs[inst.graph].check_node(c)?,
                _ => {}
            }
        }
        if self.task == Task::TransductiveNode && self.graphs.len() != 1 {
            return bad(format!("transductive dataset has {} graphs", self.graphs.len()));
        }
        let mut seen = vec![false; self.instances.len()];
        for name in SplitName::ALL {
            for &i in self.splits.get(name) {
                if i >= seen.len() {
                    return bad(format!("split {} references missing instance {i}", name.as_str()));
                }
                if core::mem::replace(&mut seen[i], true) {
                    return bad(format!("instance {i} appears in more than one split"));
                }
            }
        }
        Ok(())
    }
}

/// G(n, p): every unordered pair is an edge independently with probability p.
pub fn erdos_renyi(n: usize, p: f64, seed: u64) -> Result<Graph> {
    erdos_renyi_with(n, p, &mut seed::rng(seed))
}

pub fn erdos_renyi_with(n: usize, p: f64, rng: &mut Rng) -> Result<Graph> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("edge probability {p} outside [0, 1]")));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("erdos_renyi needs at least one node".into()));
    }
    let mut pairs = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen::<f64>() < p {
                pairs.push((u, v));
            }
        }
    }
    Graph::from_edges(n, pairs)
}

/// Edge probability used for a blob of `size` nodes.
///
/// The base value gives expected degree `target_degree`. Large blobs at that
/// density are almost never connected, so the probability is raised to the
/// connectivity threshold `(ln s + margin) / s` when that is higher.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlobDensity {
    pub target_degree: f64,
    pub connectivity_margin: f64,
}

impl Default for BlobDensity {
    fn default() -> Self {
        BlobDensity { target_degree: 2.0, connectivity_margin: 1.0 }
    }
}

impl BlobDensity {
    pub fn edge_probability(&self, size: usize) -> f64 {
        if size <= 1 {
            return 0.0;
        }
        let s = size as f64;
        let base = self.target_degree / (s - 1.0);
        let threshold = (libm::log(s) + self.connectivity_margin) / s;
        base.max(threshold).min(1.0)
    }
}

/// How a graph's nodes are shared out among its components.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Composition {
    /// Uniform over compositions with every blob at least `min_blob` nodes.
    Uniform,
    /// One large blob plus small ones whose sizes follow the law of tree
    /// components in a sparse G(n, c/n): `P(s) ~ s^(s-2) / s! * (c e^-c)^s`,
    /// truncated at `max_size`. Most extra components are isolated nodes.
    /// `c` defaults to the expected degree of the large blob.
    ErTail { mean_degree: Option<f64>, max_size: usize },
}

impl Default for Composition {
    fn default() -> Self {
        Composition::ErTail { mean_degree: None, max_size: 6 }
    }
}

impl Composition {
    fn sizes(&self, n: usize, k: usize, min_blob: usize, density: &BlobDensity, rng: &mut Rng) -> Result<Vec<usize>> {
        match *self {
            Composition::Uniform => random_composition(n, k, min_blob, rng),
            Composition::ErTail { mean_degree, max_size } => {
                let giant = n.saturating_sub(k - 1).max(2);
                let c = mean_degree.unwrap_or_else(|| density.edge_probability(giant) * (giant - 1) as f64);
                let weights = tree_component_weights(c, max_size.max(1));
                let mut sizes = vec![0];
                for _ in 1..k {
                    let room = n.saturating_sub(min_blob + sizes.iter().sum::<usize>());
                    if room < k - sizes.len() {
                        return Err(Error::InfeasiblePartition { nodes: n, parts: k, min_size: 1 });
                    }
                    let cap = weights.len().min(room - (k - sizes.len() - 1));
                    let total: f64 = weights[..cap].iter().sum();
                    let mut x = rng.gen::<f64>() * total;
                    let mut s = cap;
                    for (i, w) in weights[..cap].iter().enumerate() {
                        if x < *w {
                            s = i + 1;
                            break;
                        }
                        x -= w;
                    }
                    sizes.push(s);
                }
                sizes[0] = n - sizes.iter().sum::<usize>();
                Ok(sizes)
            }
        }
    }
}

/// Unnormalized `s^(s-2) / s! * (c e^-c)^s` for `s = 1..=max`.
fn tree_component_weights(c: f64, max: usize) -> Vec<f64> {
    let x = c * libm::exp(-c);
    (1..=max)
        .map(|s| {
            let s_f = s as f64;
            let log_w = (s_f - 2.0) * libm::log(s_f) - libm::lgamma(s_f + 1.0) + s_f * libm::log(x);
            libm::exp(log_w)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComponentDatasetConfig {
    pub min_nodes: usize,
    pub max_nodes: usize,
    pub per_class: usize,
    /// Component counts to generate, a subset of {1, 2, 3}.
    pub classes: Vec<usize>,
    pub splits: SplitSizes,
    pub min_blob: usize,
    pub composition: Composition,
    pub density: BlobDensity,
    /// Resampling attempts per blob before giving up.
    pub max_attempts: usize,
    pub seed: u64,
}

impl Default for ComponentDatasetConfig {
    fn default() -> Self {
        ComponentDatasetConfig {
            min_nodes: 15,
            max_nodes: 20,
            per_class: 300,
            classes: vec![1, 2, 3],
            splits: SplitSizes { train: 600, test_i: 240, test_ii: 60 },
            min_blob: 3,
            composition: Composition::default(),
            density: BlobDensity::default(),
            max_attempts: 10_000,
            seed: 0,
        }
    }
}

/// Balanced component-counting dataset. Class id `k - 1` holds graphs with
/// `k` components; `label_base` is 1.
pub fn gen_component_dataset(cfg: &ComponentDatasetConfig) -> Result<Dataset> {
    if cfg.classes.is_empty() || cfg.classes.iter().any(|&k| !(1..=3).contains(&k)) {
        return Err(Error::InvalidArgument(format!("component classes must be a non-empty subset of {{1, 2, 3}}, got {:?}", cfg.classes)));
    }
    if cfg.min_nodes == 0 || cfg.min_nodes > cfg.max_nodes || cfg.min_blob == 0 {
        return Err(Error::InvalidArgument(format!("bad size range {}..={} / min blob {}", cfg.min_nodes, cfg.max_nodes, cfg.min_blob)));
    }
    let mut classes = cfg.classes.clone();
    classes.sort_unstable();
    classes.dedup();
    for &k in &classes {
        if cfg.max_nodes < k * cfg.min_blob {
            return Err(Error::InfeasiblePartition { nodes: cfg.max_nodes, parts: k, min_size: cfg.min_blob });
        }
    }
    let total = classes.len() * cfg.per_class;
    if cfg.splits.total() != total {
        return Err(Error::InvalidArgument(format!("split sizes sum to {} but the dataset has {total} instances", cfg.splits.total())));
    }

    let mut graphs = Vec::with_capacity(total);
    let mut instances = Vec::with_capacity(total);
    let mut by_class: Vec<Vec<usize>> = Vec::new();
    for (ci, &k) in classes.iter().enumerate() {
        let mut members = Vec::with_capacity(cfg.per_class);
        for j in 0..cfg.per_class {
            let mut rng = seed::stream(cfg.seed, ((ci as u64) << 32) | j as u64);
            let g = component_graph(k, cfg, &mut rng)?;
            debug_assert_eq!(g.connected_components(), k);
            members.push(instances.len());
            instances.push(DataInstance { graph: graphs.len(), target: None, label: k - 1 });
            graphs.push(g);
        }
        by_class.push(members);
    }

    let mut rng = seed::stream(cfg.seed, u64::MAX);
    let splits = balanced_splits(&mut by_class, &cfg.splits, &mut rng);
    let ds = Dataset { task: Task::InductiveGraph, graphs, instances, splits, num_classes: *classes.last().unwrap(), label_base: 1 };
    ds.validate()?;
    Ok(ds)
}

fn component_graph(k: usize, cfg: &ComponentDatasetConfig, rng: &mut Rng) -> Result<Graph> {
    let lo = cfg.min_nodes.max(k * cfg.min_blob);
    let n = rng.gen_range(lo..=cfg.max_nodes);
    let sizes = cfg.composition.sizes(n, k, cfg.min_blob, &cfg.density, rng)?;
    let mut perm: Vec<NodeId> = (0..n).collect();
    perm.shuffle(rng);
    let mut pairs = Vec::new();
    let mut offset = 0;
    for &s in &sizes {
        let blob = connected_blob(s, cfg.density.edge_probability(s), cfg.max_attempts, rng)?;
        pairs.extend(blob.edges().map(|e| (perm[offset + e.u()], perm[offset + e.v()])));
        offset += s;
    }
    Graph::from_edges(n, pairs)?.with_node_features(1, vec![1.0; n])
}

/// Uniform composition of `n` into `k` parts of at least `min` each
/// (stars and bars over the `n - k * min` surplus).
fn random_composition(n: usize, k: usize, min: usize, rng: &mut Rng) -> Result<Vec<usize>> {
    if k == 0 || n < k * min {
        return Err(Error::InfeasiblePartition { nodes: n, parts: k, min_size: min });
    }
    let slots = n - k * min + k - 1;
    let mut bars: Vec<usize> = rand::seq::index::sample(rng, slots, k - 1).into_vec();
    bars.sort_unstable();
    let mut sizes = Vec::with_capacity(k);
    let mut start = 0;
    for &bar in &bars {
        sizes.push(min + bar - start);
        start = bar + 1;
    }
    sizes.push(min + slots - start);
    debug_assert_eq!(sizes.iter().sum::<usize>(), n);
    Ok(sizes)
}

fn connected_blob(size: usize, p: f64, attempts: usize, rng: &mut Rng) -> Result<Graph> {
    for _ in 0..attempts.max(1) {
        let g = erdos_renyi_with(size, p, rng)?;
        if g.connected_components() == 1 {
            return Ok(g);
        }
    }
    Err(Error::Generation(format!("no connected G({size}, {p:.3}) blob after {attempts} attempts")))
}

/// Splits each class list into train/test I/test II quotas so every split is
/// class-balanced (remainders go to the lowest classes).
fn balanced_splits(by_class: &mut [Vec<usize>], sizes: &SplitSizes, rng: &mut Rng) -> Splits {
    let k = by_class.len();
    let quota = |total: usize, class: usize| total / k + usize::from(class < total % k);
    let mut splits = Splits::default();
    let mut cursor = vec![0usize; k];
    for members in by_class.iter_mut() {
        members.shuffle(rng);
    }
    let plan = [(SplitName::TestI, sizes.test_i), (SplitName::TestIi, sizes.test_ii), (SplitName::Train, sizes.train)];
    for (name, total) in plan {
        let out = splits.get_mut(name);
        for (class, members) in by_class.iter().enumerate() {
            let want = if name == SplitName::Train {
                members.len() - cursor[class]
            } else {
                quota(total, class).min(members.len() - cursor[class])
            };
            out.extend_from_slice(&members[cursor[class]..cursor[class] + want]);
            cursor[class] += want;
        }
        out.sort_unstable();
    }
    splits
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeDatasetConfig {
    pub num_nodes: usize,
    pub num_classes: usize,
    /// Expected number of same-class neighbors per node.
    pub degree_in: f64,
    /// Expected number of other-class neighbors per node.
    pub degree_out: f64,
    pub feature_dim: usize,
    /// Probability that a feature owned by the node's class is on.
    pub feature_on: f64,
    /// Probability that any other feature is on.
    pub feature_noise: f64,
    pub splits: SplitSizes,
    pub seed: u64,
}

impl Default for NodeDatasetConfig {
    fn default() -> Self {
        NodeDatasetConfig {
            num_nodes: 2000,
            num_classes: 3,
            degree_in: 3.0,
            degree_out: 0.5,
            feature_dim: 24,
            feature_on: 0.15,
            feature_noise: 0.05,
            splits: SplitSizes { train: 150, test_i: 300, test_ii: 150 },
            seed: 0,
        }
    }
}

/// One stochastic-block-model graph with class-correlated binary features.
/// Feature `j` belongs to class `j % num_classes`.
pub fn gen_node_dataset(cfg: &NodeDatasetConfig) -> Result<Dataset> {
    let n = cfg.num_nodes;
    let y = cfg.num_classes;
    if n < 2 || y < 2 || cfg.feature_dim == 0 {
        return Err(Error::InvalidArgument("node dataset needs >= 2 nodes, >= 2 classes and features".into()));
    }
    if cfg.splits.total() > n {
        return Err(Error::InvalidArgument(format!("split sizes exceed {n} nodes")));
    }
    let mut rng = seed::rng(cfg.seed);
    let labels: Vec<usize> = (0..n).map(|v| v % y).collect::<Vec<_>>().tap_shuffle(&mut rng);
    let same = (n / y).max(2) as f64;
    let p_in = (cfg.degree_in / (same - 1.0)).min(1.0);
    let p_out = (cfg.degree_out / (n as f64 - same)).min(1.0);
    let mut pairs = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let p = if labels[u] == labels[v] { p_in } else { p_out };
            if rng.gen::<f64>() < p {
                pairs.push((u, v));
            }
        }
    }
    let mut features = vec![0.0; n * cfg.feature_dim];
    for v in 0..n {
        for j in 0..cfg.feature_dim {
            let p = if j % y == labels[v] { cfg.feature_on } else { cfg.feature_noise };
            if rng.gen::<f64>() < p {
                features[v * cfg.feature_dim + j] = 1.0;
            }
        }
    }
    let graph = Graph::from_edges(n, pairs)?.with_node_features(cfg.feature_dim, features)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let instances = (0..n).map(|v| DataInstance { graph: 0, target: Some(v), label: labels[v] }).collect();
    let (a, b) = (cfg.splits.train, cfg.splits.train + cfg.splits.test_i);
    let mut splits =
        Splits { train: order[..a].to_vec(), test_i: order[a..b].to_vec(), test_ii: order[b..b + cfg.splits.test_ii].to_vec() };
    splits.train.sort_unstable();
    splits.test_i.sort_unstable();
    splits.test_ii.sort_unstable();
    let ds = Dataset { task: Task::TransductiveNode, graphs: vec![graph], instances, splits, num_classes: y, label_base: 0 };
    ds.validate()?;
    Ok(ds)
}

trait TapShuffle {
    fn tap_shuffle(self, rng: &mut Rng) -> Self;
}

impl<T> TapShuffle for Vec<T> {
    fn tap_shuffle(mut self, rng: &mut Rng) -> Self {
        self.shuffle(rng);
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg() -> ComponentDatasetConfig {
        ComponentDatasetConfig {
            per_class: 10,
            splits: SplitSizes { train: 24, test_i: 4, test_ii: 2 },
            seed: 3,
            ..ComponentDatasetConfig::default()
        }
    }

    #[test]
    fn er_extremes() {
        assert_eq!(erdos_renyi(5, 0.0, 1).unwrap().num_edges(), 0);
        assert_eq!(erdos_renyi(5, 1.0, 1).unwrap().num_edges(), 10);
        assert!(erdos_renyi(5, 1.5, 1).is_err());
    }

    #[test]
    fn er_edge_count_statistics() {
        // Binomial(1225, 0.1): mean 122.5, sd sqrt(1225 * 0.1 * 0.9) = 10.5.
        let (mean, sd) = (122.5, libm::sqrt(1225.0 * 0.09));
        let mut total = 0.0;
        for s in 0..200 {
            let m = erdos_renyi(50, 0.1, s).unwrap().num_edges() as f64;
            assert!((m - mean).abs() <= 5.0 * sd, "seed {s}: {m} edges");
            total += m;
        }
        // mean of 200 draws: sd / sqrt(200)
        assert!((total / 200.0 - mean).abs() <= 5.0 * sd / libm::sqrt(200.0));
    }

    #[test]
    fn er_is_deterministic() {
        assert_eq!(erdos_renyi(30, 0.2, 9).unwrap(), erdos_renyi(30, 0.2, 9).unwrap());
    }

    #[test]
    fn component_dataset_labels_match_gold() {
        let ds = gen_component_dataset(&small_cfg()).unwrap();
        assert_eq!(ds.instances.len(), 30);
        for inst in &ds.instances {
            let g = ds.graph_of(inst);
            assert_eq!(g.connected_components(), inst.label + 1);
            assert!((15..=20).contains(&g.num_nodes()));
            assert_eq!(g.node_features(0), &[1.0]);
        }
        let mut counts = [0; 3];
        ds.instances.iter().for_each(|i| counts[i.label] += 1);
        assert_eq!(counts, [10, 10, 10]);
    }

    #[test]
    fn component_splits_are_disjoint_and_cover() {
        let ds = gen_component_dataset(&small_cfg()).unwrap();
        assert_eq!((ds.splits.train.len(), ds.splits.test_i.len(), ds.splits.test_ii.len()), (24, 4, 2));
        let mut all: Vec<usize> = ds.splits.train.iter().chain(&ds.splits.test_i).chain(&ds.splits.test_ii).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..30).collect::<Vec<_>>());
    }

    #[test]
    fn single_class_graphs_are_connected() {
        let cfg = ComponentDatasetConfig {
            classes: vec![1],
            per_class: 12,
            splits: SplitSizes { train: 6, test_i: 3, test_ii: 3 },
            min_nodes: 40,
            max_nodes: 50,
            ..ComponentDatasetConfig::default()
        };
        let ds = gen_component_dataset(&cfg).unwrap();
        assert!(ds.instances.iter().all(|i| ds.graph_of(i).connected_components() == 1 && i.label == 0));
    }

    #[test]
    fn generation_is_reproducible() {
        assert_eq!(gen_component_dataset(&small_cfg()).unwrap(), gen_component_dataset(&small_cfg()).unwrap());
    }

    #[test]
    fn infeasible_partition_is_rejected() {
        let cfg = ComponentDatasetConfig { min_nodes: 4, max_nodes: 6, ..small_cfg() };
        assert!(matches!(gen_component_dataset(&cfg), Err(Error::InfeasiblePartition { .. })));
    }

    #[test]
    fn compositions_respect_minimum() {
        let mut rng = seed::rng(1);
        for n in 9..30 {
            for k in 1..=3 {
                let sizes = random_composition(n, k, 3, &mut rng).unwrap();
                assert_eq!(sizes.len(), k);
                assert_eq!(sizes.iter().sum::<usize>(), n);
                assert!(sizes.iter().all(|&s| s >= 3));
            }
        }
    }

    #[test]
    fn large_buckets_generate() {
        let cfg = ComponentDatasetConfig {
            min_nodes: 90,
            max_nodes: 100,
            per_class: 2,
            splits: SplitSizes { train: 6, test_i: 0, test_ii: 0 },
            ..ComponentDatasetConfig::default()
        };
        let ds = gen_component_dataset(&cfg).unwrap();
        assert_eq!(ds.instances.len(), 6);
    }

    #[test]
    fn node_dataset_shape() {
        let cfg =
            NodeDatasetConfig { num_nodes: 300, splits: SplitSizes { train: 30, test_i: 60, test_ii: 30 }, ..NodeDatasetConfig::default() };
        let ds = gen_node_dataset(&cfg).unwrap();
        assert_eq!(ds.graphs.len(), 1);
        assert_eq!(ds.instances.len(), 300);
        assert_eq!(ds.graphs[0].node_dim(), cfg.feature_dim);
        ds.validate().unwrap();
        assert_eq!(ds, gen_node_dataset(&cfg).unwrap());
    }

    #[test]
    fn tree_component_law_ratios() {
        // w(s+1) / w(s) for s = 1, 2: x / 2 and x, with x = c e^-c
        let c = 2.5;
        let x = c * libm::exp(-c);
        let w = tree_component_weights(c, 3);
        assert!((w[0] - x).abs() < 1e-12);
        assert!((w[1] / w[0] - x / 2.0).abs() < 1e-12);
        assert!((w[2] / w[1] - x).abs() < 1e-12);
    }

    #[test]
    fn tail_composition_keeps_one_large_blob() {
        let comp = Composition::default();
        let density = BlobDensity::default();
        let mut rng = seed::rng(8);
        let mut singletons = 0;
        for _ in 0..500 {
            let n = rng.gen_range(6..30);
            let sizes = comp.sizes(n, 3, 3, &density, &mut rng).unwrap();
            assert_eq!(sizes.len(), 3);
            assert_eq!(sizes.iter().sum::<usize>(), n);
            assert!(sizes[0] >= 3 && sizes[1..].iter().all(|&s| (1..=6).contains(&s)));
            singletons += sizes[1..].iter().filter(|&&s| s == 1).count();
        }
        // isolated nodes dominate the small components
        assert!(singletons > 800);
        assert!(comp.sizes(4, 3, 3, &density, &mut rng).is_err());
    }
}
