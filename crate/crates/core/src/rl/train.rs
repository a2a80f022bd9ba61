//! Q-learning over the unrolled hierarchical Bellman targets, with
//! experience replay and a periodically synced target network.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::attack::{AttackInstance, AttackSetup, Constraint, ModelHandle};
use crate::error::{Error, Result};
use crate::gnn::GnnModel;
use crate::optim::{Optimizer, OptimizerKind};
use crate::rl::mdp::{MdpState, Transition};
use crate::rl::policy::{max_valid, rollout, HierQ, RewardMode, RolloutSpec};
use crate::rl::qnet::{QConfig, QNetworks};
use crate::seed::{self, Rng};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DqnHyper {
    pub episodes: usize,
    pub lr: f64,
    pub optimizer: OptimizerKind,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Fraction of the episodes over which epsilon decays linearly.
    pub epsilon_decay: f64,
    pub replay_capacity: usize,
    pub batch: usize,
    /// Copy the online network into the target network every this many
    /// updates.
    pub target_sync: usize,
    pub reward: RewardMode,
    pub allow_noop: bool,
    /// Pooled ball radius when the indicator has none of its own.
    pub ball_hops: usize,
    /// Score the greedy policy on the training instances every this many
    /// episodes and keep the best-scoring networks; 0 keeps the final ones.
    pub eval_every: usize,
    pub seed: u64,
}

impl Default for DqnHyper {
    fn default() -> Self {
        DqnHyper {
            episodes: 2000,
            lr: 1e-3,
            optimizer: OptimizerKind::adam(),
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            epsilon_decay: 0.5,
            replay_capacity: 50_000,
            batch: 64,
            target_sync: 50,
            reward: RewardMode::Label,
            allow_noop: true,
            ball_hops: 2,
            eval_every: 100,
            seed: 0,
        }
    }
}

impl DqnHyper {
    /// Exploration rate for episode `ep`.
    pub fn epsilon(&self, ep: usize) -> f64 {
        let span = self.epsilon_decay * self.episodes as f64;
        if span <= 0.0 {
            return self.epsilon_end;
        }
        let frac = (ep as f64 / span).min(1.0);
        self.epsilon_start + (self.epsilon_end - self.epsilon_start) * frac
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        if self.batch == 0 || self.replay_capacity < self.batch || self.target_sync == 0 || self.lr < 0.0 {
            return Err(Error::InvalidArgument("batch, replay capacity, target sync and lr must be positive".into()));
        }
        if !unit(self.epsilon_start) || !unit(self.epsilon_end) || self.epsilon_decay.is_nan() || self.epsilon_decay < 0.0 {
            return Err(Error::InvalidArgument("epsilon values must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// Fixed-capacity FIFO of transitions with uniform sampling.
#[derive(Clone, Debug)]
pub struct ReplayBuffer {
    capacity: usize,
    items: VecDeque<Transition>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        ReplayBuffer { capacity, items: VecDeque::with_capacity(capacity.min(4096)) }
    }

    pub fn push(&mut self, t: Transition) {
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(t);
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// `k` draws with replacement.
    pub fn sample(&self, k: usize, rng: &mut Rng) -> Vec<&Transition> {
        (0..k).map(|_| &self.items[rng.gen_range(0..self.items.len())]).collect()
    }
}

/// Regression targets `(y1, y2)` for the two decisions of `tr`:
/// `y1 = max_a2 Q2(s, a1, a2)` and `y2 = r` at the last step, otherwise
/// `max_a1' Q1(s', a1')`.
pub fn td_targets<Q: HierQ + ?Sized>(
    q: &Q,
    constraint: &Constraint,
    tr: &Transition,
    allow_noop: bool,
    ball_hops: usize,
) -> Result<(f64, f64)> {
    let s = MdpState::at(constraint, tr.toggles.clone(), tr.t, allow_noop, ball_hops);
    let (_, y1) = max_valid(&q.q2(&s, tr.action.first)?).ok_or(Error::NoValidAction)?;
    let y2 = if tr.terminal {
        tr.reward
    } else {
        let next = MdpState::at(constraint, tr.next_toggles.clone(), tr.t + 1, allow_noop, ball_hops);
        max_valid(&q.q1(&next)?).ok_or(Error::NoValidAction)?.1
    };
    Ok((y1, y2))
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub episodes: usize,
    pub updates: usize,
    /// Target-model queries spent, including the initial label checks.
    pub queries: u64,
    /// Instances the model classified correctly and that were trained on.
    pub trained_instances: usize,
    /// Terminal reward per episode.
    pub rewards: Vec<f64>,
    /// Mean squared TD error per update.
    pub td_errors: Vec<f64>,
    /// `(episodes, mean greedy reward)` at each evaluation.
    pub evals: Vec<(usize, f64)>,
    /// Episodes trained when the returned networks were taken.
    pub kept_episode: usize,
}

/// Mean terminal reward of the greedy policy over `pool`.
pub(crate) fn greedy_score(
    q: &QNetworks,
    pool: &[AttackInstance<'_>],
    constraints: &[Constraint],
    hyper: &DqnHyper,
    handle: &ModelHandle<'_>,
) -> Result<f64> {
    let mut rng = seed::stream(hyper.seed, 3);
    let mut total = 0.0;
    for (i, (inst, cons)) in pool.iter().zip(constraints).enumerate() {
        let mut inst = *inst;
        inst.id = i;
        let spec = RolloutSpec {
            budget: cons.budget(),
            epsilon: 0.0,
            allow_noop: hyper.allow_noop,
            ball_hops: crate::rl::mdp::ball_hops_for(cons, hyper.ball_hops),
            reward: Some((hyper.reward, handle)),
        };
        total += rollout(q, &inst, cons, &spec, &mut rng)?.reward.unwrap_or(0.0);
    }
    Ok(total / pool.len() as f64)
}

/// Trains one shared pair of Q-functions against every instance.
/// Instances the model already misclassifies are skipped.
pub fn train_agent(
    instances: &[AttackInstance<'_>],
    model: &GnnModel,
    setup: &AttackSetup,
    cfg: QConfig,
    hyper: &DqnHyper,
) -> Result<(QNetworks, TrainLog)> {
    hyper.validate()?;
    let handle = ModelHandle::new(model, setup.threat);
    let mut pool = Vec::new();
    for inst in instances {
        if handle.label(inst.graph, inst.target)? == inst.label {
            pool.push(*inst);
        }
    }
    if pool.is_empty() {
        return Err(Error::EmptyTrainingSplit);
    }
    let constraints =
        pool.iter().map(|inst| Constraint::new(setup.indicator, setup.budget, inst.graph, inst.target)).collect::<Result<Vec<_>>>()?;
    let mut q = QNetworks::init(cfg, seed::mix(hyper.seed, 0))?;
    let mut target = q.clone();
    let mut episode_rng = seed::stream(hyper.seed, 1);
    let mut replay_rng = seed::stream(hyper.seed, 2);
    let mut opt = Optimizer::new(hyper.optimizer, hyper.lr);
    let mut replay = ReplayBuffer::new(hyper.replay_capacity);
    let mut log = TrainLog { trained_instances: pool.len(), ..Default::default() };
    let mut best: Option<(f64, QNetworks)> = None;

    for ep in 0..hyper.episodes {
        let idx = episode_rng.gen_range(0..pool.len());
        let mut inst = pool[idx];
        inst.id = idx;
        let cons = &constraints[idx];
        let ball = crate::rl::mdp::ball_hops_for(cons, hyper.ball_hops);
        let spec = RolloutSpec {
            budget: cons.budget(),
            epsilon: hyper.epsilon(ep),
            allow_noop: hyper.allow_noop,
            ball_hops: ball,
            reward: Some((hyper.reward, &handle)),
        };
        let traj = rollout(&q, &inst, cons, &spec, &mut episode_rng)?;
        log.rewards.push(traj.reward.unwrap_or(0.0));
        for tr in traj.transitions {
            replay.push(tr);
            if replay.len() < hyper.batch {
                continue;
            }
            let batch = replay.sample(hyper.batch, &mut replay_rng);
            let mut grads = q.params.zeros_like();
            let mut sq = 0.0;
            for tr in batch {
                let cons = &constraints[tr.instance];
                let ball = crate::rl::mdp::ball_hops_for(cons, hyper.ball_hops);
                let (y1, y2) = td_targets(&target, cons, tr, hyper.allow_noop, ball)?;
                let s = MdpState::at(cons, tr.toggles.clone(), tr.t, hyper.allow_noop, ball);
                let q1 = q.accumulate(&s, tr.action.first, None, y1, &mut grads)?;
                let q2 = q.accumulate(&s, tr.action.first, Some(tr.action.second), y2, &mut grads)?;
                sq += (q1 - y1) * (q1 - y1) + (q2 - y2) * (q2 - y2);
            }
            grads.scale(1.0 / hyper.batch as f64);
            opt.step(&mut q.params, &grads)?;
            log.updates += 1;
            log.td_errors.push(sq / (2 * hyper.batch) as f64);
            if log.updates.is_multiple_of(hyper.target_sync) {
                target = q.clone();
            }
        }
        log.episodes += 1;
        if hyper.eval_every > 0 && (log.episodes.is_multiple_of(hyper.eval_every) || log.episodes == hyper.episodes) {
            let score = greedy_score(&q, &pool, &constraints, hyper, &handle)?;
            log.evals.push((log.episodes, score));
            if best.as_ref().is_none_or(|(b, _)| score > *b) {
                best = Some((score, q.clone()));
                log.kept_episode = log.episodes;
            }
        }
    }
    match best {
        Some((_, kept)) => q = kept,
        None => log.kept_episode = log.episodes,
    }
    log.queries = handle.queries();
    q.reset_evals();
    Ok((q, log))
}
