//! The finite-horizon attack MDP: states, hierarchical actions, transitions.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::attack::indicator::xor_one;
use crate::attack::{Constraint, EquivalencyIndicator};
use crate::error::{Error, Result};
use crate::graph::{Edge, Graph, NodeId};

/// Edit kind once an action is resolved against the current graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ActionKind {
    Add,
    Delete,
    /// The dummy edge: nothing changes but a budget step is spent.
    Noop,
}

/// Two endpoint choices. `first == second` selects the dummy edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct HierAction {
    pub first: NodeId,
    pub second: NodeId,
}

impl HierAction {
    pub fn is_noop(&self) -> bool {
        self.first == self.second
    }

    pub fn edge(&self) -> Option<Edge> {
        Edge::new(self.first, self.second).ok()
    }

    pub fn kind(&self, g: &Graph) -> ActionKind {
        match self.edge() {
            None => ActionKind::Noop,
            Some(e) if g.contains(&e) => ActionKind::Delete,
            Some(_) => ActionKind::Add,
        }
    }
}

/// `(Ĝ_t, c)` plus the step index. Toggles are kept relative to the
/// original graph so a state can be rebuilt from its constraint alone.
#[derive(Clone, Debug)]
pub struct MdpState<'c> {
    constraint: &'c Constraint,
    graph: Graph,
    toggles: Vec<Edge>,
    t: usize,
    allow_noop: bool,
    ball_hops: usize,
    valid: Vec<Edge>,
}

impl<'c> MdpState<'c> {
    /// The state at `t = 1`.
    pub fn initial(constraint: &'c Constraint, allow_noop: bool, ball_hops: usize) -> Self {
        Self::at(constraint, Vec::new(), 1, allow_noop, ball_hops)
    }

    /// The state reached by `toggles` (sorted) at step `t`.
    pub fn at(constraint: &'c Constraint, toggles: Vec<Edge>, t: usize, allow_noop: bool, ball_hops: usize) -> Self {
        let graph = constraint.original().toggled(&toggles);
        let valid = constraint.valid_toggles(&graph).into_iter().filter(|e| toggles.binary_search(e).is_err()).collect();
        MdpState { constraint, graph, toggles, t, allow_noop, ball_hops, valid }
    }

    pub fn constraint(&self) -> &'c Constraint {
        self.constraint
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn toggles(&self) -> &[Edge] {
        &self.toggles
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn target(&self) -> Option<NodeId> {
        self.constraint.target()
    }

    pub fn allow_noop(&self) -> bool {
        self.allow_noop
    }

    pub fn ball_hops(&self) -> usize {
        self.ball_hops
    }

    /// New pairs whose toggle keeps the state admitted.
    pub fn valid_edges(&self) -> &[Edge] {
        &self.valid
    }

    /// Nodes that may be scored as a first endpoint.
    pub fn scored(&self) -> Vec<NodeId> {
        self.constraint.region()
    }

    /// Nodes averaged into the state embedding: every node for a graph task,
    /// the current `b`-hop ball of the target otherwise.
    pub fn pooled(&self) -> Vec<NodeId> {
        match self.target() {
            None => (0..self.graph.num_nodes()).collect(),
            Some(c) => self.graph.b_hop_neighborhood(c, self.ball_hops).expect("target checked by constraint"),
        }
    }

    /// Valid first endpoints, sorted.
    pub fn firsts(&self) -> Vec<NodeId> {
        if self.allow_noop {
            return self.scored();
        }
        let mut out: Vec<NodeId> = self.valid.iter().flat_map(|e| [e.u(), e.v()]).collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Valid second endpoints after `first`, sorted.
    pub fn seconds(&self, first: NodeId) -> Vec<NodeId> {
        let mut out: Vec<NodeId> =
            self.valid.iter().filter(|e| e.touches(first)).map(|e| if e.u() == first { e.v() } else { e.u() }).collect();
        if self.allow_noop && self.constraint.region().binary_search(&first).is_ok() {
            out.push(first);
        }
        out.sort_unstable();
        out
    }

    pub fn is_valid(&self, a: &HierAction) -> bool {
        match a.edge() {
            None => self.allow_noop && self.constraint.region().binary_search(&a.first).is_ok(),
            Some(e) => self.valid.binary_search(&e).is_ok(),
        }
    }

    /// Applies a valid action and advances `t`.
    pub fn step(&self, a: &HierAction) -> Result<MdpState<'c>> {
        if !self.is_valid(a) {
            return Err(Error::NoValidAction);
        }
        let toggles = match a.edge() {
            None => self.toggles.clone(),
            Some(e) => xor_one(&self.toggles, e),
        };
        Ok(Self::at(self.constraint, toggles, self.t + 1, self.allow_noop, self.ball_hops))
    }
}

/// Radius of the pooled ball: the indicator's own `b` when it has one.
pub fn ball_hops_for(constraint: &Constraint, default: usize) -> usize {
    match *constraint.indicator() {
        EquivalencyIndicator::SmallMod { b, .. } => b,
        EquivalencyIndicator::Explicit { .. } => default,
    }
}

/// One hierarchical step. `reward` is nonzero only when `terminal`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    /// Index of the instance in the training set.
    pub instance: usize,
    pub toggles: Vec<Edge>,
    pub t: usize,
    pub action: HierAction,
    pub reward: f64,
    pub next_toggles: Vec<Edge>,
    pub terminal: bool,
}

/// Sorted nodes within `hops` of any seed node.
pub fn closure(g: &Graph, seeds: &[NodeId], hops: usize) -> Vec<NodeId> {
    let mut dist = vec![usize::MAX; g.num_nodes()];
    let mut queue = VecDeque::new();
    for &s in seeds {
        if dist[s] == usize::MAX {
            dist[s] = 0;
            queue.push_back(s);
        }
    }
    while let Some(u) = queue.pop_front() {
        if dist[u] == hops {
            continue;
        }
        for &w in g.neighbors(u) {
            if dist[w] == usize::MAX {
                dist[w] = dist[u] + 1;
                queue.push_back(w);
            }
        }
    }
    (0..g.num_nodes()).filter(|&v| dist[v] != usize::MAX).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attack::GoldClassifier;

    const EXPLICIT: EquivalencyIndicator = EquivalencyIndicator::Explicit { gold: GoldClassifier::ComponentCount };

    #[test]
    fn toggle_semantics() {
        let g = Graph::from_edges(3, [(0, 1)]).unwrap();
        assert_eq!(HierAction { first: 1, second: 0 }.kind(&g), ActionKind::Delete);
        assert_eq!(HierAction { first: 2, second: 0 }.kind(&g), ActionKind::Add);
        assert_eq!(HierAction { first: 2, second: 2 }.kind(&g), ActionKind::Noop);
    }

    #[test]
    fn masks_follow_the_constraint() {
        // a path: deleting any edge changes the component count
        let g = Graph::from_edges(4, [(0, 1), (1, 2), (2, 3)]).unwrap();
        let cons = Constraint::new(EXPLICIT, 2, &g, None).unwrap();
        let s = MdpState::initial(&cons, false, 2);
        assert_eq!(s.valid_edges(), &[Edge::new(0, 2).unwrap(), Edge::new(0, 3).unwrap(), Edge::new(1, 3).unwrap()]);
        assert_eq!(s.seconds(0), vec![2, 3]);
        assert_eq!(s.firsts(), vec![0, 1, 2, 3]);
        let with_noop = MdpState::initial(&cons, true, 2);
        assert_eq!(with_noop.seconds(1), vec![1, 3]);
    }

    #[test]
    fn no_valid_action_without_noop() {
        let g = Graph::from_edges(2, [(0, 1)]).unwrap();
        let cons = Constraint::new(EXPLICIT, 1, &g, None).unwrap();
        let s = MdpState::initial(&cons, false, 2);
        assert!(s.firsts().is_empty());
        assert_eq!(s.step(&HierAction { first: 0, second: 1 }).unwrap_err(), Error::NoValidAction);
    }

    #[test]
    fn steps_accumulate_toggles_and_never_revisit() {
        let g = Graph::from_edges(4, [(0, 1), (1, 2), (2, 3)]).unwrap();
        let cons = Constraint::new(EXPLICIT, 2, &g, None).unwrap();
        let s = MdpState::initial(&cons, true, 2);
        let s2 = s.step(&HierAction { first: 0, second: 2 }).unwrap();
        assert_eq!(s2.t(), 2);
        assert!(s2.graph().contains(&Edge::new(0, 2).unwrap()));
        assert!(!s2.is_valid(&HierAction { first: 2, second: 0 }));
        // with the chord in place (1, 2) is no longer a bridge
        assert!(s2.is_valid(&HierAction { first: 1, second: 2 }));
        let s3 = s2.step(&HierAction { first: 3, second: 3 }).unwrap();
        assert_eq!(s3.toggles(), s2.toggles());
    }

    #[test]
    fn node_task_pools_the_current_ball() {
        let g = Graph::from_edges(6, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5)]).unwrap();
        let ind = EquivalencyIndicator::SmallMod { m: 2, b: 2, deletions_only: false };
        let cons = Constraint::new(ind, 2, &g, Some(0)).unwrap();
        let s = MdpState::initial(&cons, true, ball_hops_for(&cons, 9));
        assert_eq!(s.pooled(), vec![0, 1, 2]);
        assert_eq!(s.scored(), vec![0, 1, 2]);
        let s2 = s.step(&HierAction { first: 0, second: 2 }).unwrap();
        assert_eq!(s2.pooled(), vec![0, 1, 2, 3]);
        assert_eq!(closure(&g, &[0, 5], 1), vec![0, 1, 4, 5]);
    }
}
