//! Brute-force search over admitted modifications. A lower bound on what
//! any attacker can reach under the same budget.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::attack::{AttackInstance, Attacker, Constraint, ModelHandle};
use crate::error::{Error, Result};
use crate::graph::{Edge, Graph};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exhaustive {
    /// Enumerate every subset up to the budget rather than single toggles.
    pub subsets: bool,
    /// Refuse to start when more candidates than this would be enumerated.
    pub cap: u128,
}

impl Default for Exhaustive {
    fn default() -> Self {
        Exhaustive { subsets: true, cap: 1_000_000 }
    }
}

/// `Σ_{k=1..=m} C(p, k)`, saturating.
pub fn subset_count(p: usize, m: usize) -> u128 {
    let mut total: u128 = 0;
    let mut c: u128 = 1;
    for k in 1..=m.min(p) {
        c = c.saturating_mul((p - k + 1) as u128) / k as u128;
        total = total.saturating_add(c);
    }
    total
}

impl Exhaustive {
    /// Number of toggle sets this configuration would try.
    pub fn count(&self, constraint: &Constraint) -> u128 {
        let p = constraint.candidate_pairs().len();
        let m = if self.subsets { constraint.budget() } else { constraint.budget().min(1) };
        subset_count(p, m)
    }

    /// The first admitted toggle set that flips the label, by size and then
    /// lexicographic order.
    pub fn search(&self, inst: &AttackInstance<'_>, constraint: &Constraint, model: &ModelHandle<'_>) -> Result<Option<Vec<Edge>>> {
        let count = self.count(constraint);
        if count > self.cap {
            return Err(Error::EnumerationCap { count, cap: self.cap });
        }
        let pairs = constraint.candidate_pairs();
        let max = if self.subsets { constraint.budget() } else { constraint.budget().min(1) };
        for size in 1..=max.min(pairs.len()) {
            let mut idx: Vec<usize> = (0..size).collect();
            loop {
                let set: Vec<Edge> = idx.iter().map(|&i| pairs[i]).collect();
                if constraint.admits_toggles(&set) && model.label(&inst.graph.toggled(&set), inst.target)? != inst.label {
                    return Ok(Some(set));
                }
                if !next_combination(&mut idx, pairs.len()) {
                    break;
                }
            }
        }
        Ok(None)
    }
}

/// Advances `idx` to the next increasing `k`-subset of `0..n`.
fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    let Some(i) = (0..k).rev().find(|&i| idx[i] < n - k + i) else {
        return false;
    };
    idx[i] += 1;
    for j in i + 1..k {
        idx[j] = idx[j - 1] + 1;
    }
    true
}

impl Attacker for Exhaustive {
    fn name(&self) -> &str {
        "exhaust"
    }

    fn attack(&self, inst: &AttackInstance<'_>, constraint: &Constraint, model: &ModelHandle<'_>, _: u64) -> Result<Graph> {
        Ok(match self.search(inst, constraint, model)? {
            Some(set) => inst.graph.toggled(&set),
            None => inst.graph.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attack::{EquivalencyIndicator, GoldClassifier, ThreatModel};
    use crate::dataset::erdos_renyi;
    use crate::gnn::{GnnConfig, GnnModel};

    #[test]
    fn combinations_are_complete() {
        for (n, k) in [(5, 1), (5, 2), (6, 3), (4, 4)] {
            let mut idx: Vec<usize> = (0..k).collect();
            let mut seen = 1u128;
            while next_combination(&mut idx, n) {
                assert!(idx.windows(2).all(|w| w[0] < w[1]) && idx[k - 1] < n);
                seen += 1;
            }
            assert_eq!(seen, subset_count(n, k) - subset_count(n, k - 1));
        }
        assert_eq!(subset_count(10, 2), 10 + 45);
    }

    #[test]
    fn cap_is_enforced() {
        let g = erdos_renyi(20, 0.2, 1).unwrap();
        let model = GnnModel::init(GnnConfig::s2v(2, 4, 3), 1).unwrap();
        let cons = Constraint::new(EquivalencyIndicator::Explicit { gold: GoldClassifier::ComponentCount }, 3, &g, None).unwrap();
        let inst = AttackInstance { id: 0, graph: &g, target: None, label: 0 };
        let h = ModelHandle::new(&model, ThreatModel::PbaD);
        let ex = Exhaustive { subsets: true, cap: 1000 };
        assert!(matches!(ex.attack(&inst, &cons, &h, 0), Err(Error::EnumerationCap { .. })));
        assert_eq!(h.queries(), 0);
    }

    #[test]
    fn finds_a_flip_whenever_one_exists() {
        let mut found = 0;
        for seed in 0..20 {
            let g = erdos_renyi(6, 0.4, seed).unwrap();
            let model = GnnModel::init(GnnConfig::s2v(2, 4, 3), seed).unwrap();
            let label = model.predict(&g, None).unwrap().class;
            let cons = Constraint::new(EquivalencyIndicator::Explicit { gold: GoldClassifier::ComponentCount }, 1, &g, None).unwrap();
            let inst = AttackInstance { id: 0, graph: &g, target: None, label };
            let h = ModelHandle::new(&model, ThreatModel::PbaD);
            let out = Exhaustive::default().attack(&inst, &cons, &h, 0).unwrap();
            assert!(cons.admits(&out));
            let flips = cons
                .candidate_pairs()
                .into_iter()
                .filter(|e| cons.admits_toggles(&[*e]))
                .any(|e| model.predict(&g.toggled(&[e]), None).unwrap().class != label);
            assert_eq!(model.predict(&out, None).unwrap().class != label, flips);
            found += flips as usize;
        }
        assert!(found > 0);
    }

    #[test]
    fn single_deletion_on_a_node_task() {
        let g = Graph::from_edges(5, [(0, 1), (1, 2), (2, 3), (3, 4)]).unwrap();
        let x: Vec<f64> = (0..5).map(|v| v as f64).collect();
        let g = g.with_node_features(1, x).unwrap();
        let model = GnnModel::init(GnnConfig::gcn(2, 4, 2, 1), 3).unwrap();
        let ind = EquivalencyIndicator::SmallMod { m: 1, b: 2, deletions_only: true };
        let cons = Constraint::new(ind, 1, &g, Some(2)).unwrap();
        let label = model.predict(&g, Some(2)).unwrap().class;
        let inst = AttackInstance { id: 0, graph: &g, target: Some(2), label };
        let h = ModelHandle::new(&model, ThreatModel::PbaD);
        let out = Exhaustive::default().attack(&inst, &cons, &h, 0).unwrap();
        assert!(g.symmetric_difference(&out).iter().all(|e| g.contains(e)));
        assert!(h.queries() <= 4);
    }
}
