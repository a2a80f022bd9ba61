//! Threat models and capability-restricted access to a target classifier.

use core::cell::Cell;

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gnn::{AlphaGradients, GnnModel};
use crate::graph::{Graph, NodeId};
use crate::linalg::cross_entropy;

/// Attacker knowledge, from most to least.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ThreatModel {
    /// White box: gradients, confidences and labels.
    #[serde(rename = "WBA")]
    Wba,
    /// Practical black box with confidence scores.
    #[serde(rename = "PBA-C")]
    PbaC,
    /// Practical black box with discrete labels only.
    #[serde(rename = "PBA-D")]
    PbaD,
    /// Restricted black box: no queries on attacked instances.
    #[serde(rename = "RBA")]
    Rba,
}

impl ThreatModel {
    pub const ALL: [ThreatModel; 4] = [ThreatModel::Wba, ThreatModel::PbaC, ThreatModel::PbaD, ThreatModel::Rba];

    pub fn as_str(&self) -> &'static str {
        match self {
            ThreatModel::Wba => "WBA",
            ThreatModel::PbaC => "PBA-C",
            ThreatModel::PbaD => "PBA-D",
            ThreatModel::Rba => "RBA",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        ThreatModel::ALL.into_iter().find(|t| t.as_str().eq_ignore_ascii_case(s))
    }

    pub fn allows_labels(&self) -> bool {
        *self != ThreatModel::Rba
    }

    pub fn allows_confidence(&self) -> bool {
        matches!(self, ThreatModel::Wba | ThreatModel::PbaC)
    }

    pub fn allows_gradients(&self) -> bool {
        *self == ThreatModel::Wba
    }
}

/// The only view of the target model an attacker gets. Every permitted call
/// counts as one query.
pub struct ModelHandle<'m> {
    model: &'m GnnModel,
    threat: ThreatModel,
    queries: Cell<u64>,
}

impl<'m> ModelHandle<'m> {
    pub fn new(model: &'m GnnModel, threat: ThreatModel) -> Self {
        ModelHandle { model, threat, queries: Cell::new(0) }
    }

    pub fn threat(&self) -> ThreatModel {
        self.threat
    }

    pub fn queries(&self) -> u64 {
        self.queries.get()
    }

    fn gate(&self, ok: bool, what: &str) -> Result<()> {
        if !ok {
            return Err(Error::ThreatModelViolation(format!("{what} requested under {}", self.threat.as_str())));
        }
        self.queries.set(self.queries.get() + 1);
        Ok(())
    }

    pub fn label(&self, g: &Graph, c: Option<NodeId>) -> Result<usize> {
        self.gate(self.threat.allows_labels(), "prediction")?;
        Ok(self.model.predict(g, c)?.class)
    }

    pub fn confidence(&self, g: &Graph, c: Option<NodeId>) -> Result<Vec<f64>> {
        self.gate(self.threat.allows_confidence(), "confidence")?;
        Ok(self.model.predict(g, c)?.confidence)
    }

    /// Loss of the true label, derived from the confidence vector.
    pub fn loss(&self, g: &Graph, c: Option<NodeId>, label: usize) -> Result<f64> {
        self.gate(self.threat.allows_confidence(), "loss")?;
        Ok(cross_entropy(&self.model.logits(g, c)?, label))
    }

    pub fn alpha_gradients(&self, g: &Graph, c: Option<NodeId>, label: usize, nodes: Option<&[NodeId]>) -> Result<AlphaGradients> {
        self.gate(self.threat.allows_gradients(), "gradient")?;
        self.model.alpha_gradients(g, c, label, nodes)
    }
}
