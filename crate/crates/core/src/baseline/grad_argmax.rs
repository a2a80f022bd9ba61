//! Greedy edge selection by the loss gradient with respect to adjacency
//! coefficients.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::attack::{AttackInstance, Attacker, Constraint, ModelHandle};
use crate::error::Result;
use crate::gnn::AlphaGradients;
use crate::graph::{Edge, Graph};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GradArgmax {
    /// Rank every pair from the gradient at the original graph instead of
    /// recomputing after each accepted edit.
    #[serde(default)]
    pub one_shot: bool,
}

impl GradArgmax {
    /// Pairs in the order they would be tried: sign-consistent, not yet
    /// toggled, nonzero gradient, by `|g|` descending with ties to the
    /// lowest pair.
    pub fn ranked(grads: &AlphaGradients, current: &Graph, constraint: &Constraint) -> Vec<(Edge, f64)> {
        let done = constraint.toggles_of(current);
        let mut ranked: Vec<(Edge, f64)> = constraint
            .candidate_pairs()
            .into_iter()
            .filter(|e| done.binary_search(e).is_err())
            .filter_map(|e| {
                let g = grads.get(e.u(), e.v())?;
                let exists = current.contains(&e);
                let consistent = (g < 0.0 && exists) || (g > 0.0 && !exists);
                consistent.then_some((e, g))
            })
            .collect();
        ranked.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()).then(a.0.cmp(&b.0)));
        ranked
    }
}

impl Attacker for GradArgmax {
    fn name(&self) -> &str {
        "gradargmax"
    }

    fn attack(&self, inst: &AttackInstance<'_>, constraint: &Constraint, model: &ModelHandle<'_>, _: u64) -> Result<Graph> {
        let region = constraint.region();
        let mut cur = inst.graph.clone();
        let mut snapshot = None;
        for _ in 0..constraint.budget() {
            let grads = match (&snapshot, self.one_shot) {
                (Some(g), true) => Clone::clone(g),
                _ => model.alpha_gradients(&cur, inst.target, inst.label, Some(&region))?,
            };
            let next = Self::ranked(&grads, &cur, constraint)
                .into_iter()
                .map(|(e, _)| constraint.apply_guarded(&cur, e))
                .find(|step| step.applied);
            match next {
                Some(step) => cur = step.graph,
                None => break,
            }
            snapshot = Some(grads);
        }
        Ok(cur)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attack::{EquivalencyIndicator, GoldClassifier, ThreatModel};
    use crate::dataset::erdos_renyi;
    use crate::gnn::{GnnConfig, GnnModel};

    fn explicit() -> EquivalencyIndicator {
        EquivalencyIndicator::Explicit { gold: GoldClassifier::ComponentCount }
    }

    #[test]
    fn zero_gradients_leave_graph_unchanged() {
        let mut model = GnnModel::init(GnnConfig::s2v(2, 4, 3), 1).unwrap();
        model.params.scale(0.0);
        let g = erdos_renyi(7, 0.3, 2).unwrap();
        let cons = Constraint::new(explicit(), 2, &g, None).unwrap();
        let h = ModelHandle::new(&model, ThreatModel::Wba);
        let inst = AttackInstance { id: 0, graph: &g, target: None, label: 0 };
        assert_eq!(GradArgmax::default().attack(&inst, &cons, &h, 0).unwrap(), g);
    }

    #[test]
    fn refuses_to_run_without_gradients() {
        let model = GnnModel::init(GnnConfig::s2v(2, 4, 3), 1).unwrap();
        let g = erdos_renyi(7, 0.3, 2).unwrap();
        let cons = Constraint::new(explicit(), 1, &g, None).unwrap();
        let inst = AttackInstance { id: 0, graph: &g, target: None, label: 0 };
        let h = ModelHandle::new(&model, ThreatModel::PbaC);
        assert!(GradArgmax::default().attack(&inst, &cons, &h, 0).is_err());
    }

    #[test]
    fn single_edit_attains_the_enumerated_maximum() {
        for seed in 0..40 {
            let model = GnnModel::init(GnnConfig::s2v(2, 5, 3), seed).unwrap();
            let g = erdos_renyi(4 + seed as usize % 5, 0.35, 100 + seed).unwrap();
            let label = seed as usize % 3;
            let cons = Constraint::new(explicit(), 1, &g, None).unwrap();
            let h = ModelHandle::new(&model, ThreatModel::Wba);
            let inst = AttackInstance { id: 0, graph: &g, target: None, label };
            let out = GradArgmax::default().attack(&inst, &cons, &h, 0).unwrap();
            let grads = model.alpha_gradients(&g, None, label, None).unwrap();
            // independent enumeration of every pair
            let n = g.num_nodes();
            let mut best = 0.0f64;
            for u in 0..n {
                for v in u + 1..n {
                    let e = Edge::new(u, v).unwrap();
                    let x = grads.get(u, v).unwrap();
                    let consistent = (x < 0.0 && g.contains(&e)) || (x > 0.0 && !g.contains(&e));
                    if consistent && cons.admits(&g.toggled(&[e])) {
                        best = best.max(x.abs());
                    }
                }
            }
            let diff = g.symmetric_difference(&out);
            if best == 0.0 {
                assert!(diff.is_empty());
            } else {
                assert_eq!(diff.len(), 1);
                assert_eq!(grads.get(diff[0].u(), diff[0].v()).unwrap().abs(), best);
            }
        }
    }

    #[test]
    fn node_task_edits_stay_near_target() {
        let g = erdos_renyi(30, 0.1, 5).unwrap();
        let x: Vec<f64> = (0..30 * 3).map(|i| ((i * 7) % 5) as f64 / 4.0).collect();
        let g = g.with_node_features(3, x).unwrap();
        let model = GnnModel::init(GnnConfig::gcn(2, 8, 3, 3), 2).unwrap();
        let ind = EquivalencyIndicator::SmallMod { m: 1, b: 2, deletions_only: false };
        for c in 0..30 {
            let cons = Constraint::new(ind, 1, &g, Some(c)).unwrap();
            let h = ModelHandle::new(&model, ThreatModel::Wba);
            let inst = AttackInstance { id: c, graph: &g, target: Some(c), label: 1 };
            let out = GradArgmax::default().attack(&inst, &cons, &h, 0).unwrap();
            for e in g.symmetric_difference(&out) {
                for v in [e.u(), e.v()] {
                    assert!(g.shortest_hop_distance(c, v).unwrap().is_some_and(|d| d <= 2));
                }
            }
        }
    }

    #[test]
    fn one_shot_uses_a_single_gradient() {
        let model = GnnModel::init(GnnConfig::s2v(2, 5, 3), 3).unwrap();
        let g = erdos_renyi(9, 0.3, 3).unwrap();
        let cons = Constraint::new(explicit(), 3, &g, None).unwrap();
        let inst = AttackInstance { id: 0, graph: &g, target: None, label: 1 };
        let h = ModelHandle::new(&model, ThreatModel::Wba);
        let out = GradArgmax { one_shot: true }.attack(&inst, &cons, &h, 0).unwrap();
        assert_eq!(h.queries(), 1);
        assert!(cons.admits(&out));
        let h = ModelHandle::new(&model, ThreatModel::Wba);
        GradArgmax::default().attack(&inst, &cons, &h, 0).unwrap();
        assert!(h.queries() >= 1);
    }
}
