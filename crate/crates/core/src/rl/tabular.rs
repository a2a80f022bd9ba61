//! Exact hierarchical Q-values of one small instance MDP, by backward
//! induction over every reachable state.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::attack::Constraint;
use crate::error::Result;
use crate::graph::{Edge, Graph, NodeId};
use crate::rl::mdp::{HierAction, MdpState};
use crate::rl::policy::HierQ;

type Key = (Vec<Edge>, usize);

/// `Q2*(s, a1, a2)` for every reachable state and valid action; `Q1*` is
/// its max over `a2`.
#[derive(Clone, Debug, Default)]
pub struct TabularQ {
    q2: BTreeMap<Key, BTreeMap<HierAction, f64>>,
}

impl TabularQ {
    /// Solves the `budget`-step MDP. `reward` scores a final graph.
    pub fn solve<F>(constraint: &Constraint, budget: usize, allow_noop: bool, ball_hops: usize, mut reward: F) -> Result<Self>
    where
        F: FnMut(&Graph) -> Result<f64>,
    {
        let mut table = TabularQ::default();
        let root = MdpState::initial(constraint, allow_noop, ball_hops);
        table.value(&root, budget, &mut reward)?;
        Ok(table)
    }

    /// `max_a Q*(s, a)`, filling the table below `s`.
    fn value<F>(&mut self, s: &MdpState<'_>, budget: usize, reward: &mut F) -> Result<f64>
    where
        F: FnMut(&Graph) -> Result<f64>,
    {
        let key = (s.toggles().to_vec(), s.t());
        if let Some(row) = self.q2.get(&key) {
            return Ok(row.values().copied().fold(f64::NEG_INFINITY, f64::max));
        }
        let mut row = BTreeMap::new();
        for first in s.firsts() {
            for second in s.seconds(first) {
                let a = HierAction { first, second };
                let next = s.step(&a)?;
                let q = if s.t() == budget { reward(next.graph())? } else { self.value(&next, budget, reward)? };
                row.insert(a, q);
            }
        }
        let best = row.values().copied().fold(f64::NEG_INFINITY, f64::max);
        self.q2.insert(key, row);
        Ok(best)
    }

    pub fn states(&self) -> usize {
        self.q2.len()
    }

    fn row(&self, s: &MdpState<'_>) -> Option<&BTreeMap<HierAction, f64>> {
        self.q2.get(&(s.toggles().to_vec(), s.t()))
    }
}

impl HierQ for TabularQ {
    fn q1(&self, s: &MdpState<'_>) -> Result<Vec<f64>> {
        let mut out = vec![f64::NEG_INFINITY; s.graph().num_nodes()];
        if let Some(row) = self.row(s) {
            for (a, &q) in row {
                out[a.first] = out[a.first].max(q);
            }
        }
        Ok(out)
    }

    fn q2(&self, s: &MdpState<'_>, first: NodeId) -> Result<Vec<f64>> {
        let mut out = vec![f64::NEG_INFINITY; s.graph().num_nodes()];
        if let Some(row) = self.row(s) {
            for (a, &q) in row.iter().filter(|(a, _)| a.first == first) {
                out[a.second] = q;
            }
        }
        Ok(out)
    }
}
