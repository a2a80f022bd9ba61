//! JSON-lines outcome logs: one record per instance, then one summary row.

use std::path::Path;

use graphadv_core::attack::{AttackOutcome, AttackSummary, ThreatModel};
use serde::{Deserialize, Serialize};

use crate::error::{self, HarnessError, Result};
use crate::pairing::Method;

/// Where a run happened and under which settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunInfo {
    pub method: Method,
    pub bucket: String,
    pub depth: usize,
    pub split: String,
    pub budget: usize,
    pub config: String,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum Line {
    Outcome(AttackOutcome),
    Summary {
        #[serde(flatten)]
        info: RunInfo,
        #[serde(flatten)]
        summary: AttackSummary,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunLog {
    pub info: RunInfo,
    pub outcomes: Vec<AttackOutcome>,
    pub summary: AttackSummary,
}

impl RunLog {
    pub fn new(info: RunInfo, threat: ThreatModel, outcomes: Vec<AttackOutcome>) -> Self {
        let summary = AttackSummary::from_outcomes(info.method.as_str(), threat, &outcomes);
        RunLog { info, outcomes, summary }
    }

    pub fn threat(&self) -> ThreatModel {
        self.summary.threat
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for o in &self.outcomes {
            out.push_str(&serde_json::to_string(&Line::Outcome(o.clone())).expect("outcome serializes"));
            out.push('\n');
        }
        let summary = Line::Summary { info: self.info.clone(), summary: self.summary.clone() };
        out.push_str(&serde_json::to_string(&summary).expect("summary serializes"));
        out.push('\n');
        out
    }

    /// Parses a log and checks that its summary row matches the summary
    /// recomputed from the records.
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut outcomes = Vec::new();
        let mut tail = None;
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            if tail.is_some() {
                return Err(HarnessError::format(path, format!("line {}: record after the summary row", i + 1)));
            }
            match serde_json::from_str(line).map_err(|e| HarnessError::format(path, format!("line {}: {e}", i + 1)))? {
                Line::Outcome(o) => outcomes.push(o),
                Line::Summary { info, summary } => tail = Some((info, summary)),
            }
        }
        let (info, stored) = tail.ok_or_else(|| HarnessError::format(path, "missing summary row"))?;
        let log = RunLog::new(info, stored.threat, outcomes);
        if log.summary != stored {
            return Err(HarnessError::format(path, "summary row disagrees with the outcome records"));
        }
        Ok(log)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        error::write(path, self.to_jsonl())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&error::read_to_string(path)?, path)
    }
}
