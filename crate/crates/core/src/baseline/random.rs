//! Random edge toggles filtered by the equivalency constraint.

use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::attack::{AttackInstance, Attacker, Constraint, ModelHandle};
use crate::error::Result;
use crate::graph::Graph;
use crate::seed;

/// Draws up to `budget` toggles uniformly among those the constraint still
/// admits, never revisiting a pair. Issues no model queries.
#[derive(Clone, Copy, Debug, Default)]
pub struct RandSampling;

impl Attacker for RandSampling {
    fn name(&self) -> &str {
        "rand"
    }

    fn attack(&self, inst: &AttackInstance<'_>, constraint: &Constraint, _: &ModelHandle<'_>, seed: u64) -> Result<Graph> {
        let mut rng = seed::rng(seed);
        let mut cur = inst.graph.clone();
        for _ in 0..constraint.budget() {
            let done = constraint.toggles_of(&cur);
            let options: Vec<_> = constraint.valid_toggles(&cur).into_iter().filter(|e| done.binary_search(e).is_err()).collect();
            let Some(&e) = options.choose(&mut rng) else { break };
            cur = constraint.apply_guarded(&cur, e).graph;
        }
        Ok(cur)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attack::{EquivalencyIndicator, GoldClassifier, ThreatModel};
    use crate::gnn::{GnnConfig, GnnModel};
    use crate::graph::Edge;

    fn run(g: &Graph, ind: EquivalencyIndicator, budget: usize, c: Option<usize>, seed: u64) -> Graph {
        let model = GnnModel::init(GnnConfig::s2v(1, 2, 3), 0).unwrap();
        let cons = Constraint::new(ind, budget, g, c).unwrap();
        let handle = ModelHandle::new(&model, ThreatModel::Rba);
        let inst = AttackInstance { id: 0, graph: g, target: c, label: 0 };
        let out = RandSampling.attack(&inst, &cons, &handle, seed).unwrap();
        assert_eq!(handle.queries(), 0);
        assert!(cons.admits(&out));
        out
    }

    #[test]
    fn zero_budget_changes_nothing() {
        let g = Graph::from_edges(4, [(0, 1), (1, 2)]).unwrap();
        let ind = EquivalencyIndicator::Explicit { gold: GoldClassifier::ComponentCount };
        assert_eq!(run(&g, ind, 0, None, 1), g);
    }

    #[test]
    fn forced_move_is_taken() {
        // deletion-only within one hop of node 0 on a single edge
        let g = Graph::from_edges(3, [(0, 1)]).unwrap();
        let ind = EquivalencyIndicator::SmallMod { m: 1, b: 1, deletions_only: true };
        for seed in 0..20 {
            let out = run(&g, ind, 1, Some(0), seed);
            assert_eq!(g.symmetric_difference(&out), [Edge::new(0, 1).unwrap()]);
        }
    }

    #[test]
    fn deterministic_and_within_budget() {
        let g = crate::dataset::erdos_renyi(12, 0.3, 4).unwrap();
        let ind = EquivalencyIndicator::Explicit { gold: GoldClassifier::ComponentCount };
        for seed in 0..30 {
            let a = run(&g, ind, 3, None, seed);
            assert_eq!(a, run(&g, ind, 3, None, seed));
            assert_eq!(g.symmetric_difference(&a).len(), 3);
        }
    }
}
