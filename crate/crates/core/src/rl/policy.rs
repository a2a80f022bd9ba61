//! Hierarchical action selection and episode rollouts.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::attack::{AttackInstance, Constraint, ModelHandle};
use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::rl::mdp::{HierAction, MdpState, Transition};
use crate::rl::qnet::{Level, QNetworks};
use crate::seed::Rng;

/// Anything that scores both decision levels. Invalid entries are `-inf`.
pub trait HierQ {
    fn q1(&self, s: &MdpState<'_>) -> Result<Vec<f64>>;
    fn q2(&self, s: &MdpState<'_>, first: NodeId) -> Result<Vec<f64>>;
}

impl HierQ for QNetworks {
    fn q1(&self, s: &MdpState<'_>) -> Result<Vec<f64>> {
        self.q1_scores(s)
    }

    fn q2(&self, s: &MdpState<'_>, first: NodeId) -> Result<Vec<f64>> {
        self.q2_scores(s, first)
    }
}

/// Defines `Q1(s, a1) = max_a2 Q2(s, a1, a2)` from any `Q2`.
pub struct MaxOverSecond<'q, Q: ?Sized>(pub &'q Q);

impl<Q: HierQ + ?Sized> HierQ for MaxOverSecond<'_, Q> {
    fn q1(&self, s: &MdpState<'_>) -> Result<Vec<f64>> {
        let mut out = alloc::vec![f64::NEG_INFINITY; s.graph().num_nodes()];
        for v in s.firsts() {
            out[v] = max_valid(&self.0.q2(s, v)?).map_or(f64::NEG_INFINITY, |(_, q)| q);
        }
        Ok(out)
    }

    fn q2(&self, s: &MdpState<'_>, first: NodeId) -> Result<Vec<f64>> {
        self.0.q2(s, first)
    }
}

/// Largest finite entry, lowest index on ties.
pub fn max_valid(scores: &[f64]) -> Option<(NodeId, f64)> {
    let mut best: Option<(NodeId, f64)> = None;
    for (v, &q) in scores.iter().enumerate() {
        if q == f64::NEG_INFINITY {
            continue;
        }
        if best.is_none_or(|(_, b)| q > b) {
            best = Some((v, q));
        }
    }
    best
}

/// `a1 = argmax Q1`, then `a2 = argmax Q2(a1, ·)`, lowest ids on ties.
pub fn greedy_action<Q: HierQ + ?Sized>(q: &Q, s: &MdpState<'_>) -> Result<HierAction> {
    let (first, _) = max_valid(&q.q1(s)?).ok_or(Error::NoValidAction)?;
    let (second, _) = max_valid(&q.q2(s, first)?).ok_or(Error::NoValidAction)?;
    Ok(HierAction { first, second })
}

/// Uniform over the kinds (add, delete, no-op) available after `first`,
/// then uniform within the chosen kind.
pub fn explore_second(s: &MdpState<'_>, first: NodeId, rng: &mut Rng) -> Result<NodeId> {
    let mut groups: [Vec<NodeId>; 3] = Default::default();
    for v in s.seconds(first) {
        let kind = HierAction { first, second: v }.kind(s.graph());
        groups[kind as usize].push(v);
    }
    let kinds: Vec<&Vec<NodeId>> = groups.iter().filter(|g| !g.is_empty()).collect();
    let group = kinds.choose(rng).ok_or(Error::NoValidAction)?;
    Ok(*group.choose(rng).ok_or(Error::NoValidAction)?)
}

/// With probability `epsilon` per level: a uniform first endpoint, then
/// [`explore_second`]. Greedy otherwise.
pub fn epsilon_greedy_action(q: &QNetworks, s: &MdpState<'_>, epsilon: f64, rng: &mut Rng) -> Result<HierAction> {
    let first = if rng.gen::<f64>() < epsilon {
        *s.firsts().choose(rng).ok_or(Error::NoValidAction)?
    } else {
        let frame = q.frame(s, Level::First)?;
        max_valid(&q.q1_scores_with(&frame, s)).ok_or(Error::NoValidAction)?.0
    };
    let second = if rng.gen::<f64>() < epsilon {
        explore_second(s, first, rng)?
    } else {
        let frame = q.frame(s, Level::Second)?;
        max_valid(&q.q2_scores_with(&frame, s, first)).ok_or(Error::NoValidAction)?.0
    };
    Ok(HierAction { first, second })
}

/// Terminal reward signal.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RewardMode {
    /// `+1` when the final prediction differs from the label, else `-1`.
    #[default]
    Label,
    /// The classifier loss of the true label on the final graph.
    Loss,
}

impl RewardMode {
    pub fn reward(&self, model: &ModelHandle<'_>, g: &Graph, c: Option<NodeId>, label: usize) -> Result<f64> {
        match self {
            RewardMode::Label => Ok(if model.label(g, c)? != label { 1.0 } else { -1.0 }),
            RewardMode::Loss => model.loss(g, c, label),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub transitions: Vec<Transition>,
    pub final_graph: Graph,
    /// `None` when no reward was requested.
    pub reward: Option<f64>,
}

/// Settings of one rollout.
#[derive(Clone, Copy)]
pub struct RolloutSpec<'h> {
    pub budget: usize,
    pub epsilon: f64,
    pub allow_noop: bool,
    pub ball_hops: usize,
    /// Queried once at the end; `None` issues no queries at all.
    pub reward: Option<(RewardMode, &'h ModelHandle<'h>)>,
}

/// Exactly `budget` hierarchical actions from the original graph.
pub fn rollout(
    q: &QNetworks,
    inst: &AttackInstance<'_>,
    constraint: &Constraint,
    spec: &RolloutSpec<'_>,
    rng: &mut Rng,
) -> Result<Trajectory> {
    let mut s = MdpState::initial(constraint, spec.allow_noop, spec.ball_hops);
    let mut transitions = Vec::with_capacity(spec.budget);
    for _ in 0..spec.budget {
        let action = if spec.epsilon > 0.0 { epsilon_greedy_action(q, &s, spec.epsilon, rng)? } else { greedy_action(q, &s)? };
        let next = s.step(&action)?;
        transitions.push(Transition {
            instance: inst.id,
            toggles: s.toggles().to_vec(),
            t: s.t(),
            action,
            reward: 0.0,
            next_toggles: next.toggles().to_vec(),
            terminal: false,
        });
        s = next;
    }
    let final_graph = s.graph().clone();
    let reward = match spec.reward {
        Some((mode, handle)) => Some(mode.reward(handle, &final_graph, inst.target, inst.label)?),
        None => None,
    };
    if let Some(last) = transitions.last_mut() {
        last.terminal = true;
        last.reward = reward.unwrap_or(0.0);
    }
    Ok(Trajectory { transitions, final_graph, reward })
}
