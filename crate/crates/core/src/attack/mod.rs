//! The attack contract shared by every attacker: modifications, the
//! equivalency constraint, threat-model gated model access, and evaluation.

pub mod indicator;
pub mod threat;

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gnn::GnnModel;
use crate::graph::{Edge, Graph, NodeId};
use crate::seed;

pub use indicator::{check_equivalency, Constraint, EquivalencyIndicator, GoldClassifier, Guarded};
pub use threat::{ModelHandle, ThreatModel};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModKind {
    Add,
    Delete,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Modification {
    pub kind: ModKind,
    pub edge: Edge,
}

impl Modification {
    /// Modifications turning `original` into `modified`.
    pub fn between(original: &Graph, modified: &Graph) -> Vec<Modification> {
        original
            .symmetric_difference(modified)
            .into_iter()
            .map(|edge| Modification { kind: if original.contains(&edge) { ModKind::Delete } else { ModKind::Add }, edge })
            .collect()
    }
}

/// One instance handed to an attacker.
#[derive(Clone, Copy, Debug)]
pub struct AttackInstance<'a> {
    pub id: usize,
    pub graph: &'a Graph,
    pub target: Option<NodeId>,
    pub label: usize,
}

pub trait Attacker {
    fn name(&self) -> &str;

    /// Returns the attacked graph. Implementations must keep it admitted by
    /// `constraint`; the evaluator re-checks.
    fn attack(&self, inst: &AttackInstance<'_>, constraint: &Constraint, model: &ModelHandle<'_>, seed: u64) -> Result<Graph>;
}

/// Leaves every graph unchanged.
#[derive(Clone, Copy, Debug, Default)]
pub struct NoAttack;

impl Attacker for NoAttack {
    fn name(&self) -> &str {
        "identity"
    }

    fn attack(&self, inst: &AttackInstance<'_>, _: &Constraint, _: &ModelHandle<'_>, _: u64) -> Result<Graph> {
        Ok(inst.graph.clone())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackOutcome {
    pub instance: usize,
    pub target: Option<NodeId>,
    pub label: usize,
    /// False when the instance was already misclassified and left alone.
    pub attacked: bool,
    pub modifications: Vec<Modification>,
    pub original_prediction: usize,
    pub final_prediction: usize,
    /// Final prediction differs from the true label.
    pub success: bool,
    pub queries_used: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackSummary {
    pub attacker: String,
    pub threat: ThreatModel,
    pub instances: usize,
    pub clean_accuracy: f64,
    pub attacked_accuracy: f64,
    pub total_queries: u64,
}

impl AttackSummary {
    /// Recomputes the summary from outcome records alone.
    pub fn from_outcomes(attacker: &str, threat: ThreatModel, outcomes: &[AttackOutcome]) -> Self {
        let n = outcomes.len();
        let frac = |k: usize| if n == 0 { 0.0 } else { k as f64 / n as f64 };
        AttackSummary {
            attacker: attacker.into(),
            threat,
            instances: n,
            clean_accuracy: frac(outcomes.iter().filter(|o| o.original_prediction == o.label).count()),
            attacked_accuracy: frac(outcomes.iter().filter(|o| !o.success).count()),
            total_queries: outcomes.iter().map(|o| o.queries_used).sum(),
        }
    }
}

/// Attack settings shared across a sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackSetup {
    pub indicator: EquivalencyIndicator,
    pub budget: usize,
    pub threat: ThreatModel,
    pub seed: u64,
}

/// Attacks one instance. Only instances the model classifies correctly are
/// attacked; the outcome is judged with the unrestricted model, and an
/// attacked graph outside the constraint is an error.
pub fn attack_one<A: Attacker + ?Sized>(
    attacker: &A,
    inst: &AttackInstance<'_>,
    model: &GnnModel,
    setup: &AttackSetup,
) -> Result<AttackOutcome> {
    let original_prediction = model.predict(inst.graph, inst.target)?.class;
    if original_prediction != inst.label {
        return Ok(AttackOutcome {
            instance: inst.id,
            target: inst.target,
            label: inst.label,
            attacked: false,
            modifications: Vec::new(),
            original_prediction,
            final_prediction: original_prediction,
            success: true,
            queries_used: 0,
        });
    }
    let constraint = Constraint::new(setup.indicator, setup.budget, inst.graph, inst.target)?;
    let handle = ModelHandle::new(model, setup.threat);
    let attacked = attacker.attack(inst, &constraint, &handle, seed::mix(setup.seed, inst.id as u64))?;
    if !constraint.admits(&attacked) {
        return Err(Error::ConstraintViolation(format!("{} produced an inadmissible graph for instance {}", attacker.name(), inst.id)));
    }
    let final_prediction = model.predict(&attacked, inst.target)?.class;
    Ok(AttackOutcome {
        instance: inst.id,
        target: inst.target,
        label: inst.label,
        attacked: true,
        modifications: Modification::between(inst.graph, &attacked),
        original_prediction,
        final_prediction,
        success: final_prediction != inst.label,
        queries_used: handle.queries(),
    })
}

/// Runs `attacker` over every instance in order.
pub fn evaluate_attack<A: Attacker + ?Sized>(
    attacker: &A,
    instances: &[AttackInstance<'_>],
    model: &GnnModel,
    setup: &AttackSetup,
) -> Result<(AttackSummary, Vec<AttackOutcome>)> {
    let outcomes = instances.iter().map(|inst| attack_one(attacker, inst, model, setup)).collect::<Result<Vec<_>>>()?;
    Ok((AttackSummary::from_outcomes(attacker.name(), setup.threat, &outcomes), outcomes))
}

/// Re-checks an outcome record against its original graph.
pub fn verify_outcome(outcome: &AttackOutcome, original: &Graph, setup: &AttackSetup) -> Result<()> {
    let toggles: Vec<Edge> = outcome.modifications.iter().map(|m| m.edge).collect();
    let kinds_ok = outcome.modifications.iter().all(|m| original.contains(&m.edge) == (m.kind == ModKind::Delete));
    let modified = original.toggled(&indicator::normalize_toggles(toggles));
    let admitted = Constraint::new(setup.indicator, setup.budget, original, outcome.target)?.admits(&modified);
    if !kinds_ok || !admitted || outcome.modifications.len() > setup.budget {
        return Err(Error::ConstraintViolation(format!("outcome for instance {}", outcome.instance)));
    }
    if outcome.success != (outcome.final_prediction != outcome.label) {
        return Err(Error::InvalidArgument(format!("inconsistent success flag for instance {}", outcome.instance)));
    }
    Ok(())
}

#[cfg(test)]
mod tests;
