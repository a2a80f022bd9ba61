//! The reinforcement-learning attacker: a finite-horizon MDP over edge
//! toggles with each action split into two endpoint choices, scored by
//! S2V-parameterized Q-functions and trained by Q-learning.

pub mod mdp;
pub mod policy;
pub mod qnet;
pub mod tabular;
pub mod train;

use serde::{Deserialize, Serialize};

use crate::attack::{AttackInstance, Attacker, Constraint, ModelHandle};
use crate::error::Result;
use crate::graph::Graph;

pub use mdp::{ActionKind, HierAction, MdpState, Transition};
pub use policy::{greedy_action, rollout, HierQ, MaxOverSecond, RewardMode, RolloutSpec, Trajectory};
pub use qnet::{QConfig, QNetworks};
pub use tabular::TabularQ;
pub use train::{td_targets, train_agent, DqnHyper, ReplayBuffer, TrainLog};

/// Rollout options that must match between training and attack time.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyOptions {
    pub allow_noop: bool,
    pub ball_hops: usize,
}

impl Default for PolicyOptions {
    fn default() -> Self {
        PolicyOptions { allow_noop: true, ball_hops: 2 }
    }
}

impl From<&DqnHyper> for PolicyOptions {
    fn from(h: &DqnHyper) -> Self {
        PolicyOptions { allow_noop: h.allow_noop, ball_hops: h.ball_hops }
    }
}

/// A trained agent used as an attacker. Attacks are greedy rollouts and
/// never query the target model, so the same agent serves every threat
/// model including transfer.
#[derive(Clone, Debug)]
pub struct RlS2v {
    pub q: QNetworks,
    pub options: PolicyOptions,
}

impl RlS2v {
    pub fn new(q: QNetworks, options: PolicyOptions) -> Self {
        RlS2v { q, options }
    }
}

impl Attacker for RlS2v {
    fn name(&self) -> &str {
        "rls2v"
    }

    fn attack(&self, inst: &AttackInstance<'_>, constraint: &Constraint, _: &ModelHandle<'_>, seed: u64) -> Result<Graph> {
        let spec = RolloutSpec {
            budget: constraint.budget(),
            epsilon: 0.0,
            allow_noop: self.options.allow_noop,
            ball_hops: mdp::ball_hops_for(constraint, self.options.ball_hops),
            reward: None,
        };
        let traj = rollout(&self.q, inst, constraint, &spec, &mut crate::seed::rng(seed))?;
        Ok(traj.final_graph)
    }
}

#[cfg(test)]
mod tests;
