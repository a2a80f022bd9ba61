//! Which attack method may run under which threat model.

use std::fmt;
use std::str::FromStr;

use graphadv_core::attack::ThreatModel;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// No modification; reports clean accuracy.
    Identity,
    Rand,
    #[serde(rename = "gradargmax")]
    GradArgmax,
    Genetic,
    Exhaust,
    #[serde(rename = "rls2v")]
    RlS2v,
}

impl Method {
    pub const ALL: [Method; 6] = [Method::Identity, Method::Rand, Method::GradArgmax, Method::Genetic, Method::Exhaust, Method::RlS2v];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Identity => "identity",
            Method::Rand => "rand",
            Method::GradArgmax => "gradargmax",
            Method::Genetic => "genetic",
            Method::Exhaust => "exhaust",
            Method::RlS2v => "rls2v",
        }
    }

    /// Name used in report rows.
    pub fn display_name(&self) -> &'static str {
        match self {
            Method::Identity => "(unattacked)",
            Method::Rand => "RandSampling",
            Method::GradArgmax => "GradArgmax",
            Method::Genetic => "GeneticAlg",
            Method::Exhaust => "Exhaust",
            Method::RlS2v => "RL-S2V",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL.into_iter().find(|m| m.as_str().eq_ignore_ascii_case(s)).ok_or_else(|| {
            HarnessError::Config(format!("unknown attack `{s}` (expected one of rand, gradargmax, genetic, exhaust, rls2v, identity)"))
        })
    }
}

/// The applicability matrix.
///
/// | method     | WBA | PBA-C | PBA-D | RBA |
/// |------------|-----|-------|-------|-----|
/// | rand       |     |       |  x    |  x  |
/// | gradargmax |  x  |       |       |     |
/// | genetic    |     |  x    |       |     |
/// | rls2v      |     |  x    |  x    |  x  |
/// | exhaust    |  x  |  x    |  x    |     |
/// | identity   |  x  |  x    |  x    |  x  |
///
/// The exhaustive oracle needs predicted labels, so it runs under any
/// threat model that exposes them.
pub fn legal(method: Method, threat: ThreatModel) -> bool {
    use ThreatModel::*;
    match method {
        Method::Rand => matches!(threat, PbaD | Rba),
        Method::GradArgmax => threat == Wba,
        Method::Genetic => threat == PbaC,
        Method::RlS2v => matches!(threat, PbaC | PbaD | Rba),
        Method::Exhaust => threat != Rba,
        Method::Identity => true,
    }
}

pub fn check(method: Method, threat: ThreatModel) -> Result<()> {
    if legal(method, threat) {
        return Ok(());
    }
    let allowed: Vec<&str> = ThreatModel::ALL.iter().filter(|&&t| legal(method, t)).map(|t| t.as_str()).collect();
    Err(HarnessError::ThreatModel(format!(
        "{} cannot run under {} (method/threat applicability matrix allows {})",
        method.display_name(),
        threat.as_str(),
        allowed.join(", ")
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ThreatModel::*;

    #[test]
    fn matrix_matches_the_application_scenarios() {
        let expect: [(Method, [bool; 4]); 4] = [
            (Method::Rand, [false, false, true, true]),
            (Method::GradArgmax, [true, false, false, false]),
            (Method::Genetic, [false, true, false, false]),
            (Method::RlS2v, [false, true, true, true]),
        ];
        for (m, row) in expect {
            for (t, ok) in [Wba, PbaC, PbaD, Rba].into_iter().zip(row) {
                assert_eq!(legal(m, t), ok, "{m} under {}", t.as_str());
            }
        }
    }

    #[test]
    fn illegal_pairing_names_the_allowed_threats() {
        let err = check(Method::Genetic, PbaD).unwrap_err();
        assert_eq!(err.exit_code(), 3);
        assert!(err.to_string().contains("GeneticAlg cannot run under PBA-D"));
        assert!(err.to_string().contains("allows PBA-C"));
    }

    #[test]
    fn names_parse() {
        for m in Method::ALL {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
        }
        assert_eq!("nope".parse::<Method>().unwrap_err().exit_code(), 2);
    }
}
