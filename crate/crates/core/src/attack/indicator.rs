//! Equivalency indicators and the per-instance constraint they induce.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Edge, Graph, NodeId};

/// Ground-truth labelers usable by [`EquivalencyIndicator::Explicit`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GoldClassifier {
    /// Number of connected components.
    ComponentCount,
}

impl GoldClassifier {
    pub fn label(&self, g: &Graph) -> usize {
        match self {
            GoldClassifier::ComponentCount => g.connected_components(),
        }
    }
}

/// Decides whether a modified graph still means the same thing as the
/// original.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EquivalencyIndicator {
    /// The gold classifier gives both graphs the same label.
    Explicit { gold: GoldClassifier },
    /// At most `m` toggled pairs, all inside the `b`-hop ball of the target
    /// node in the original graph. With `deletions_only` every toggled pair
    /// must be an original edge.
    SmallMod {
        m: usize,
        b: usize,
        #[serde(default)]
        deletions_only: bool,
    },
}

impl EquivalencyIndicator {
    pub fn validate(&self) -> Result<()> {
        match *self {
            EquivalencyIndicator::SmallMod { m, b, .. } if m == 0 || b == 0 => {
                Err(Error::InvalidArgument(alloc::format!("SmallMod needs m >= 1 and b >= 1, got m={m} b={b}")))
            }
            _ => Ok(()),
        }
    }
}

/// `I(G, G_mod, c)`.
pub fn check_equivalency(ind: &EquivalencyIndicator, g: &Graph, g_mod: &Graph, c: Option<NodeId>) -> Result<bool> {
    if g.num_nodes() != g_mod.num_nodes() {
        return Err(Error::InvalidArgument("graphs do not share a node set".into()));
    }
    match *ind {
        EquivalencyIndicator::Explicit { gold } => Ok(gold.label(g) == gold.label(g_mod)),
        EquivalencyIndicator::SmallMod { m, b, deletions_only } => {
            let c = c.ok_or(Error::MissingTarget)?;
            let diff = g.symmetric_difference(g_mod);
            if diff.len() > m {
                return Ok(false);
            }
            let dist = g.distances_from(c)?;
            let near = |v: NodeId| dist[v].is_some_and(|d| d <= b);
            Ok(diff.iter().all(|e| near(e.u()) && near(e.v()) && (!deletions_only || g.contains(e))))
        }
    }
}

/// Outcome of [`Constraint::apply_guarded`].
#[derive(Clone, Debug, PartialEq)]
pub struct Guarded {
    pub graph: Graph,
    pub applied: bool,
}

/// An indicator bound to one original graph, target and edit budget.
///
/// All checks are relative to the original graph: the ball is computed once
/// on it and budgets count toggled pairs against it.
#[derive(Clone, Debug)]
pub struct Constraint {
    indicator: EquivalencyIndicator,
    budget: usize,
    original: Graph,
    target: Option<NodeId>,
    /// Nodes allowed as endpoints; `None` means every node.
    region: Option<Vec<NodeId>>,
    gold_label: Option<usize>,
}

impl Constraint {
    /// `budget` caps the number of toggled pairs; a `SmallMod` indicator
    /// further caps it at its own `m`.
    pub fn new(indicator: EquivalencyIndicator, budget: usize, original: &Graph, target: Option<NodeId>) -> Result<Self> {
        indicator.validate()?;
        if let Some(c) = target {
            original.check_node(c)?;
        }
        let (budget, region, gold_label) = match indicator {
            EquivalencyIndicator::Explicit { gold } => (budget, None, Some(gold.label(original))),
            EquivalencyIndicator::SmallMod { m, b, .. } => {
                let c = target.ok_or(Error::MissingTarget)?;
                (budget.min(m), Some(original.b_hop_neighborhood(c, b)?), None)
            }
        };
        Ok(Constraint { indicator, budget, original: original.clone(), target, region, gold_label })
    }

    pub fn indicator(&self) -> &EquivalencyIndicator {
        &self.indicator
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn original(&self) -> &Graph {
        &self.original
    }

    pub fn target(&self) -> Option<NodeId> {
        self.target
    }

    /// Endpoints any modification may touch, sorted.
    pub fn region(&self) -> Vec<NodeId> {
        match &self.region {
            Some(r) => r.clone(),
            None => (0..self.original.num_nodes()).collect(),
        }
    }

    fn deletions_only(&self) -> bool {
        matches!(self.indicator, EquivalencyIndicator::SmallMod { deletions_only: true, .. })
    }

    fn in_region(&self, v: NodeId) -> bool {
        self.region.as_ref().map_or(v < self.original.num_nodes(), |r| r.binary_search(&v).is_ok())
    }

    /// Whether `e` may ever be toggled, ignoring budget and gold labels.
    pub fn pair_allowed(&self, e: &Edge) -> bool {
        self.in_region(e.u()) && self.in_region(e.v()) && (!self.deletions_only() || self.original.contains(e))
    }

    /// Every pair [`Self::pair_allowed`] accepts, in canonical order.
    pub fn candidate_pairs(&self) -> Vec<Edge> {
        let region = self.region();
        let mut out = Vec::new();
        for (i, &u) in region.iter().enumerate() {
            for &v in &region[i + 1..] {
                let e = Edge::new(u, v).expect("distinct region nodes");
                if self.pair_allowed(&e) {
                    out.push(e);
                }
            }
        }
        out
    }

    /// Whether toggling exactly the distinct pairs `toggles` (relative to the
    /// original) is equivalent.
    pub fn admits_toggles(&self, toggles: &[Edge]) -> bool {
        if toggles.len() > self.budget || !toggles.iter().all(|e| self.pair_allowed(e)) {
            return false;
        }
        match (self.indicator, self.gold_label) {
            (EquivalencyIndicator::Explicit { gold }, Some(label)) => gold.label(&self.original.toggled(toggles)) == label,
            _ => true,
        }
    }

    /// Whether `g_mod` is equivalent to the original within the budget.
    pub fn admits(&self, g_mod: &Graph) -> bool {
        if g_mod.num_nodes() != self.original.num_nodes() {
            return false;
        }
        self.admits_toggles(&self.original.symmetric_difference(g_mod))
    }

    /// Toggled pairs of `current` relative to the original.
    pub fn toggles_of(&self, current: &Graph) -> Vec<Edge> {
        self.original.symmetric_difference(current)
    }

    /// Pairs whose toggle from `current` keeps the graph admitted.
    pub fn valid_toggles(&self, current: &Graph) -> Vec<Edge> {
        let base = self.toggles_of(current);
        let candidates = self.candidate_pairs();
        if let (EquivalencyIndicator::Explicit { gold: GoldClassifier::ComponentCount }, true) =
            (self.indicator, self.admits_toggles(&base))
        {
            // current already has the original count: an added edge keeps it
            // iff it stays inside a component, a deleted one iff not a bridge
            let comp = current.component_labels();
            let bridges = current.bridges();
            return candidates
                .into_iter()
                .filter(|e| {
                    let size = if base.binary_search(e).is_ok() { base.len() - 1 } else { base.len() + 1 };
                    let keeps = if current.contains(e) { bridges.binary_search(e).is_err() } else { comp[e.u()] == comp[e.v()] };
                    size <= self.budget && keeps
                })
                .collect();
        }
        candidates.into_iter().filter(|e| self.admits_toggles(&xor_one(&base, *e))).collect()
    }

    /// Toggles `e` on `current` when the result stays admitted; otherwise
    /// returns `current` unchanged with `applied = false`.
    pub fn apply_guarded(&self, current: &Graph, e: Edge) -> Guarded {
        if e.v() >= current.num_nodes() || !self.admits_toggles(&xor_one(&self.toggles_of(current), e)) {
            return Guarded { graph: current.clone(), applied: false };
        }
        Guarded { graph: current.toggled(&[e]), applied: true }
    }
}

/// `set xor {e}` for a sorted, duplicate-free edge list.
pub fn xor_one(set: &[Edge], e: Edge) -> Vec<Edge> {
    let mut out = set.to_vec();
    match out.binary_search(&e) {
        Ok(i) => {
            out.remove(i);
        }
        Err(i) => out.insert(i, e),
    }
    out
}

/// Sorts and removes pairs listed an even number of times.
pub fn normalize_toggles(mut pairs: Vec<Edge>) -> Vec<Edge> {
    pairs.sort_unstable();
    let mut out: Vec<Edge> = Vec::with_capacity(pairs.len());
    let mut i = 0;
    while i < pairs.len() {
        let mut j = i;
        while j < pairs.len() && pairs[j] == pairs[i] {
            j += 1;
        }
        if (j - i) % 2 == 1 {
            out.push(pairs[i]);
        }
        i = j;
    }
    out
}
