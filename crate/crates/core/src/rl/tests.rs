use super::*;
use crate::attack::{AttackSetup, EquivalencyIndicator, GoldClassifier, ThreatModel};
use crate::baseline::Exhaustive;
use crate::dataset::erdos_renyi;
use crate::error::Error;
use crate::gnn::{GnnConfig, GnnModel};
use crate::graph::{Edge, NodeId};
use crate::linalg::relu;
use crate::params::dot;
use crate::rl::qnet::Level;
use crate::rl::train::greedy_score;
use alloc::vec;
use alloc::vec::Vec;
use rand::Rng as _;

const EXPLICIT: EquivalencyIndicator = EquivalencyIndicator::Explicit { gold: GoldClassifier::ComponentCount };

fn agent(depth: usize, d: usize, seed: u64) -> QNetworks {
    let mut q = QNetworks::init(QConfig::graph_task(depth, d), seed).unwrap();
    // nonzero biases so every code path is exercised
    let mut rng = crate::seed::rng(seed ^ 77);
    for (_, t) in q.params.iter_mut() {
        if t.shape().len() == 1 {
            for x in t.data_mut() {
                *x = rng.gen_range(-0.3..0.3);
            }
        }
    }
    q
}

fn perm_graph(g: &Graph, perm: &[NodeId]) -> Graph {
    Graph::from_edges(g.num_nodes(), g.edges().map(|e| (perm[e.u()], perm[e.v()]))).unwrap()
}

#[test]
fn single_node_state_is_its_embedding() {
    let g = Graph::new(1);
    let cons = Constraint::new(EXPLICIT, 1, &g, None).unwrap();
    let s = MdpState::initial(&cons, true, 2);
    let q = agent(2, 4, 1);
    let f = q.frame(&s, Level::First).unwrap();
    assert_eq!(f.state_embedding(), f.mu(0));
}

#[test]
fn isolated_target_state_repeats_its_embedding() {
    let g = Graph::from_edges(3, [(1, 2)]).unwrap().with_node_features(1, vec![0.5, 1.0, -1.0]).unwrap();
    let ind = EquivalencyIndicator::SmallMod { m: 1, b: 2, deletions_only: false };
    let cons = Constraint::new(ind, 1, &g, Some(0)).unwrap();
    let s = MdpState::initial(&cons, true, 2);
    let q = QNetworks::init(QConfig::node_task(2, 3, 1), 4).unwrap();
    let f = q.frame(&s, Level::Second).unwrap();
    assert_eq!(&f.state_embedding()[..3], f.mu(0));
    assert_eq!(&f.state_embedding()[3..], f.mu(0));
}

#[test]
fn graph_state_embedding_is_permutation_invariant() {
    let q = agent(3, 5, 2);
    for seed in 0..10 {
        let g = erdos_renyi(9, 0.3, seed).unwrap();
        let mut perm: Vec<NodeId> = (0..9).collect();
        rand::seq::SliceRandom::shuffle(&mut perm[..], &mut crate::seed::rng(seed));
        let h = perm_graph(&g, &perm);
        let (cg, ch) = (Constraint::new(EXPLICIT, 1, &g, None).unwrap(), Constraint::new(EXPLICIT, 1, &h, None).unwrap());
        let a = q.frame(&MdpState::initial(&cg, true, 2), Level::First).unwrap();
        let b = q.frame(&MdpState::initial(&ch, true, 2), Level::First).unwrap();
        for (x, y) in a.state_embedding().iter().zip(b.state_embedding()) {
            assert!((x - y).abs() < 1e-9);
        }
        // node scores follow the permutation
        let sa = q.q1_scores(&MdpState::initial(&cg, true, 2)).unwrap();
        let sb = q.q1_scores(&MdpState::initial(&ch, true, 2)).unwrap();
        for v in 0..9 {
            assert!((sa[v] - sb[perm[v]]).abs() < 1e-9);
        }
    }
}

#[test]
fn zero_weights_score_zero_and_break_ties_low() {
    let mut q = agent(2, 4, 3);
    q.params.scale(0.0);
    let g = Graph::from_edges(5, [(0, 1), (1, 2), (3, 4)]).unwrap();
    let cons = Constraint::new(EXPLICIT, 1, &g, None).unwrap();
    let s = MdpState::initial(&cons, false, 2);
    let scores = q.q1_scores(&s).unwrap();
    for v in s.firsts() {
        assert_eq!(scores[v], 0.0);
    }
    // every deletion splits a component, so adding (0, 2) is the only edit
    assert_eq!(greedy_action(&q, &s).unwrap(), HierAction { first: 0, second: 2 });
    let with_noop = MdpState::initial(&cons, true, 2);
    assert_eq!(greedy_action(&q, &with_noop).unwrap(), HierAction { first: 0, second: 0 });
}

#[test]
fn automorphic_nodes_score_equally() {
    let q = agent(2, 6, 4);
    let ring = Graph::from_edges(6, (0..6).map(|i| (i, (i + 1) % 6))).unwrap();
    let cons = Constraint::new(EXPLICIT, 1, &ring, None).unwrap();
    let s = MdpState::initial(&cons, true, 2);
    let q1 = q.q1_scores(&s).unwrap();
    assert!(q1.iter().all(|&x| (x - q1[0]).abs() < 1e-12));
    let q2 = q.q2_scores(&s, 0).unwrap();
    assert!((q2[1] - q2[5]).abs() < 1e-12 && (q2[2] - q2[4]).abs() < 1e-12);
}

/// Direct dense evaluation of both levels, written independently of the
/// frame machinery.
fn dense_scores(q: &QNetworks, g: &Graph, first: NodeId) -> (Vec<f64>, Vec<f64>) {
    let n = g.num_nodes();
    let cfg = q.cfg;
    let p = |name: &str| q.params.get(name).unwrap();
    let embed = |prefix: &str| -> Vec<Vec<f64>> {
        let (wn, wm) = (p(&alloc::format!("{prefix}.w_node")), p(&alloc::format!("{prefix}.w_msg")));
        let mut mu = vec![vec![0.0; cfg.embed_dim]; n];
        for _ in 0..cfg.depth {
            let mut next = vec![vec![0.0; cfg.embed_dim]; n];
            for v in 0..n {
                let mut agg = vec![0.0; cfg.embed_dim];
                for &u in g.neighbors(v) {
                    for i in 0..cfg.embed_dim {
                        agg[i] += mu[u][i];
                    }
                }
                for i in 0..cfg.embed_dim {
                    next[v][i] = relu(dot(wn.row(i), &[1.0, 0.0]) + dot(wm.row(i), &agg));
                }
            }
            mu = next;
        }
        mu
    };
    let head = |prefix: &str, x: &[f64]| -> f64 {
        let (wh, bh, wo, bo) = (
            p(&alloc::format!("{prefix}.w_hidden")),
            p(&alloc::format!("{prefix}.b_hidden")),
            p(&alloc::format!("{prefix}.w_out")),
            p(&alloc::format!("{prefix}.b_out")),
        );
        let mut out = bo.data()[0];
        for r in 0..cfg.hidden_dim {
            out += wo.data()[r] * relu(dot(wh.row(r), x) + bh.data()[r]);
        }
        out
    };
    let mu1 = embed("q1");
    let mu2 = embed("q2");
    let mean = |mu: &Vec<Vec<f64>>| -> Vec<f64> { (0..cfg.embed_dim).map(|i| mu.iter().map(|m| m[i]).sum::<f64>() / n as f64).collect() };
    let (s1, s2) = (mean(&mu1), mean(&mu2));
    let q1 = (0..n).map(|v| head("q1", &[mu1[v].clone(), s1.clone()].concat())).collect();
    let q2 = (0..n)
        .map(|v| {
            let edge = g.neighbors(first).contains(&v) as u8 as f64;
            let noop = (v == first) as u8 as f64;
            head("q2", &[mu2[first].clone(), mu2[v].clone(), s2.clone(), vec![edge, noop]].concat())
        })
        .collect();
    (q1, q2)
}

#[test]
fn scores_match_a_dense_reimplementation() {
    for seed in 0..10 {
        let q = agent(1 + seed as usize % 3, 5, seed);
        let g = erdos_renyi(8, 0.3, 40 + seed).unwrap();
        // Explicit semantics with budget large enough that nothing is masked
        // except bridges; compare on unmasked entries
        let cons = Constraint::new(EXPLICIT, 3, &g, None).unwrap();
        let s = MdpState::initial(&cons, true, 2);
        let first = seed as usize % 8;
        let (d1, d2) = dense_scores(&q, &g, first);
        let q1 = q.q1_scores(&s).unwrap();
        let q2 = q.q2_scores(&s, first).unwrap();
        for v in 0..8 {
            assert!((q1[v] - d1[v]).abs() < 1e-10);
            if q2[v].is_finite() {
                assert!((q2[v] - d2[v]).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn second_level_masks_respect_the_ball() {
    let g = erdos_renyi(25, 0.12, 6).unwrap();
    let ind = EquivalencyIndicator::SmallMod { m: 1, b: 2, deletions_only: false };
    let q = QNetworks::init(QConfig::node_task(2, 4, 0), 1).unwrap();
    for c in 0..25 {
        let cons = Constraint::new(ind, 1, &g, Some(c)).unwrap();
        let ball = g.b_hop_neighborhood(c, 2).unwrap();
        let s = MdpState::initial(&cons, false, 2);
        for first in s.firsts() {
            assert!(ball.contains(&first));
            let q2 = q.q2_scores(&s, first).unwrap();
            for (v, x) in q2.iter().enumerate() {
                assert_eq!(x.is_finite(), ball.contains(&v) && v != first, "c={c} first={first} v={v}");
            }
        }
    }
}

#[test]
fn all_masked_is_no_valid_action() {
    let g = Graph::from_edges(2, [(0, 1)]).unwrap();
    let cons = Constraint::new(EXPLICIT, 1, &g, None).unwrap();
    let s = MdpState::initial(&cons, false, 2);
    assert_eq!(greedy_action(&agent(1, 2, 0), &s).unwrap_err(), Error::NoValidAction);
}

/// Scores from a fixed table: `q1[v]` and `q2[a1][a2]`.
struct Fixed {
    q1: Vec<f64>,
    q2: Vec<Vec<f64>>,
}

impl HierQ for Fixed {
    fn q1(&self, s: &MdpState<'_>) -> crate::Result<Vec<f64>> {
        let valid = s.firsts();
        Ok((0..self.q1.len()).map(|v| if valid.contains(&v) { self.q1[v] } else { f64::NEG_INFINITY }).collect())
    }

    fn q2(&self, s: &MdpState<'_>, first: NodeId) -> crate::Result<Vec<f64>> {
        let valid = s.seconds(first);
        Ok((0..self.q1.len()).map(|v| if valid.contains(&v) { self.q2[first][v] } else { f64::NEG_INFINITY }).collect())
    }
}

#[test]
fn hand_set_scores_pick_the_planted_action() {
    let g = Graph::from_edges(9, (0..8).map(|i| (i, i + 1))).unwrap();
    let cons = Constraint::new(EXPLICIT, 1, &g, None).unwrap();
    let s = MdpState::initial(&cons, true, 2);
    let mut q1 = vec![0.0; 9];
    q1[3] = 2.0;
    let mut q2 = vec![vec![0.0; 9]; 9];
    q2[3][7] = 5.0;
    assert_eq!(greedy_action(&Fixed { q1, q2 }, &s).unwrap(), HierAction { first: 3, second: 7 });
}

/// Flat argmax over every valid ordered pair, lowest pair on ties.
fn flat_argmax<Q: HierQ>(q: &Q, s: &MdpState<'_>) -> HierAction {
    let mut best: Option<(HierAction, f64)> = None;
    for first in 0..s.graph().num_nodes() {
        let row = q.q2(s, first).unwrap();
        for (second, &x) in row.iter().enumerate() {
            if x.is_finite() && best.is_none_or(|(_, b)| x > b) {
                best = Some((HierAction { first, second }, x));
            }
        }
    }
    best.unwrap().0
}

#[test]
fn hierarchical_argmax_equals_flat_argmax() {
    for seed in 0..50u64 {
        let q = agent(1 + seed as usize % 3, 4, seed);
        let n = 3 + seed as usize % 6;
        let g = erdos_renyi(n, 0.35, 500 + seed).unwrap();
        let cons = Constraint::new(EXPLICIT, 2, &g, None).unwrap();
        let s0 = MdpState::initial(&cons, true, 2);
        // walk a random valid step half of the time
        let s = if seed % 2 == 0 { s0.step(&HierAction { first: 0, second: s0.seconds(0)[0] }).unwrap() } else { s0 };
        let composed = MaxOverSecond(&q);
        assert_eq!(greedy_action(&composed, &s).unwrap(), flat_argmax(&composed, &s), "seed {seed}");
        // integer-valued ties still agree
        let table = Fixed {
            q1: vec![0.0; n],
            q2: (0..n).map(|a| (0..n).map(|b| ((a * 7 + b * 3 + seed as usize) % 4) as f64).collect()).collect(),
        };
        assert_eq!(greedy_action(&MaxOverSecond(&table), &s).unwrap(), flat_argmax(&table, &s));
    }
}

#[test]
fn one_action_costs_one_score_per_node_per_level() {
    let q = agent(2, 4, 8);
    for n in [5, 9, 14] {
        let g = erdos_renyi(n, 0.3, n as u64).unwrap();
        let cons = Constraint::new(EXPLICIT, 1, &g, None).unwrap();
        let s = MdpState::initial(&cons, true, 2);
        q.reset_evals();
        greedy_action(&q, &s).unwrap();
        assert_eq!(q.evals(), (n as u64, n as u64));
    }
}

#[test]
fn accumulate_matches_finite_differences() {
    let h = 1e-4;
    for seed in 0..6u64 {
        let node_task = seed % 2 == 1;
        let n = 7;
        let g = erdos_renyi(n, 0.35, 900 + seed).unwrap();
        let (q, cons) = if node_task {
            let g2 = g.with_node_features(1, (0..n).map(|v| v as f64 / 3.0).collect()).unwrap();
            let ind = EquivalencyIndicator::SmallMod { m: 2, b: 2, deletions_only: false };
            (QNetworks::init(QConfig::node_task(2, 4, 1), seed).unwrap(), Constraint::new(ind, 2, &g2, Some(0)).unwrap())
        } else {
            (agent(2, 4, seed), Constraint::new(EXPLICIT, 2, &g, None).unwrap())
        };
        let s = MdpState::initial(&cons, true, 2);
        let first = s.firsts()[0];
        let second = *s.seconds(first).last().unwrap();
        for sec in [None, Some(second)] {
            let mut grads = q.params.zeros_like();
            let value = q.accumulate(&s, first, sec, 0.0, &mut grads).unwrap();
            // d(0.5 (Q - 0)^2) = Q dQ
            let eval = |p: &QNetworks| match sec {
                None => p.q1_scores(&s).unwrap()[first],
                Some(b) => p.q2_scores(&s, first).unwrap()[b],
            };
            let names: Vec<alloc::string::String> = q.params.names().map(Into::into).collect();
            for name in names {
                let len = q.params.get(&name).unwrap().len();
                for i in 0..len {
                    let mut plus = q.clone();
                    plus.params.get_mut(&name).unwrap().data_mut()[i] += h;
                    let mut minus = q.clone();
                    minus.params.get_mut(&name).unwrap().data_mut()[i] -= h;
                    let fd = value * (eval(&plus) - eval(&minus)) / (2.0 * h);
                    let an = grads.get(&name).unwrap().data()[i];
                    let rel = (fd - an).abs() / fd.abs().max(an.abs()).max(1e-6);
                    assert!(rel < 1e-3, "{name}[{i}] fd={fd} an={an} seed={seed}");
                }
            }
        }
    }
}

fn trained_target() -> (GnnModel, Vec<Graph>) {
    let model = GnnModel::init(GnnConfig::s2v(2, 6, 3), 11).unwrap();
    let graphs = (0..8).map(|s| erdos_renyi(8, 0.3, 70 + s).unwrap()).collect();
    (model, graphs)
}

#[test]
fn rollouts_have_fixed_length_and_terminal_reward() {
    let (model, graphs) = trained_target();
    let q = agent(2, 4, 1);
    let handle = ModelHandle::new(&model, ThreatModel::PbaD);
    let mut rng = crate::seed::rng(3);
    for (id, g) in graphs.iter().enumerate() {
        let label = model.predict(g, None).unwrap().class;
        let inst = AttackInstance { id, graph: g, target: None, label };
        let cons = Constraint::new(EXPLICIT, 3, g, None).unwrap();
        let spec = RolloutSpec { budget: 3, epsilon: 0.5, allow_noop: true, ball_hops: 2, reward: Some((RewardMode::Label, &handle)) };
        let traj = rollout(&q, &inst, &cons, &spec, &mut rng).unwrap();
        assert_eq!(traj.transitions.len(), 3);
        assert!(traj.transitions[..2].iter().all(|t| t.reward == 0.0 && !t.terminal));
        let last = traj.transitions.last().unwrap();
        let flipped = model.predict(&traj.final_graph, None).unwrap().class != label;
        assert_eq!(last.reward, if flipped { 1.0 } else { -1.0 });
        assert!(last.terminal);
        assert!(cons.admits(&traj.final_graph));
        assert_eq!(traj.transitions.iter().map(|t| t.t).collect::<Vec<_>>(), vec![1, 2, 3]);
    }
    assert_eq!(handle.queries(), graphs.len() as u64);
}

#[test]
fn loss_reward_uses_confidences() {
    let (model, graphs) = trained_target();
    let g = &graphs[0];
    let inst = AttackInstance { id: 0, graph: g, target: None, label: 1 };
    let cons = Constraint::new(EXPLICIT, 1, g, None).unwrap();
    let pbac = ModelHandle::new(&model, ThreatModel::PbaC);
    let spec = RolloutSpec { budget: 1, epsilon: 0.0, allow_noop: true, ball_hops: 2, reward: Some((RewardMode::Loss, &pbac)) };
    let traj = rollout(&agent(1, 3, 0), &inst, &cons, &spec, &mut crate::seed::rng(0)).unwrap();
    assert_eq!(traj.reward, Some(model.loss(&traj.final_graph, None, 1).unwrap()));
    let pbad = ModelHandle::new(&model, ThreatModel::PbaD);
    let spec = RolloutSpec { reward: Some((RewardMode::Loss, &pbad)), ..spec };
    assert!(matches!(rollout(&agent(1, 3, 0), &inst, &cons, &spec, &mut crate::seed::rng(0)), Err(Error::ThreatModelViolation(_))));
}

#[test]
fn full_exploration_is_uniform_over_firsts_then_kinds() {
    let g = Graph::from_edges(5, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)]).unwrap();
    let cons = Constraint::new(EXPLICIT, 1, &g, None).unwrap();
    let s = MdpState::initial(&cons, true, 2);
    let q = agent(1, 3, 0);
    let mut rng = crate::seed::rng(99);
    let mut counts = alloc::collections::BTreeMap::new();
    let draws = 10_000;
    for _ in 0..draws {
        let a = policy::epsilon_greedy_action(&q, &s, 1.0, &mut rng).unwrap();
        assert!(s.is_valid(&a));
        *counts.entry(a).or_insert(0usize) += 1;
    }
    let firsts = s.firsts();
    let mut chi2 = 0.0;
    let mut cells = 0;
    for &a1 in &firsts {
        let seconds = s.seconds(a1);
        let kind_of = |a2| HierAction { first: a1, second: a2 }.kind(&g);
        let mut kinds: Vec<_> = seconds.iter().map(|&a2| kind_of(a2)).collect();
        kinds.dedup();
        kinds.sort_by_key(|k| *k as usize);
        kinds.dedup();
        for &a2 in &seconds {
            let same = seconds.iter().filter(|&&v| kind_of(v) == kind_of(a2)).count();
            let expected = draws as f64 / (firsts.len() * kinds.len() * same) as f64;
            let seen = *counts.get(&HierAction { first: a1, second: a2 }).unwrap_or(&0) as f64;
            chi2 += (seen - expected) * (seen - expected) / expected;
            cells += 1;
        }
    }
    assert_eq!(counts.len(), cells);
    // 25 cells, 24 degrees of freedom: the 0.999 quantile is about 51.2
    assert_eq!(cells, 25);
    assert!(chi2 < 51.2, "chi2 = {chi2}");
}

#[test]
fn exact_tabular_solution_has_zero_td_error() {
    let g = Graph::from_edges(3, [(0, 1)]).unwrap();
    let model = GnnModel::init(GnnConfig::s2v(2, 4, 3), 5).unwrap();
    let label = model.predict(&g, None).unwrap().class;
    for budget in 1..=2 {
        let cons = Constraint::new(EXPLICIT, budget, &g, None).unwrap();
        let handle = ModelHandle::new(&model, ThreatModel::PbaD);
        let table = TabularQ::solve(&cons, budget, true, 2, |h| RewardMode::Label.reward(&handle, h, None, label)).unwrap();
        assert!(table.states() >= 1);
        // every transition of every reachable state
        let mut frontier = vec![MdpState::initial(&cons, true, 2)];
        let mut checked = 0;
        while let Some(s) = frontier.pop() {
            for first in s.firsts() {
                let q1 = table.q1(&s).unwrap()[first];
                for second in s.seconds(first) {
                    let a = HierAction { first, second };
                    let next = s.step(&a).unwrap();
                    let terminal = s.t() == budget;
                    let reward = if terminal { RewardMode::Label.reward(&handle, next.graph(), None, label).unwrap() } else { 0.0 };
                    let tr = Transition {
                        instance: 0,
                        toggles: s.toggles().to_vec(),
                        t: s.t(),
                        action: a,
                        reward,
                        next_toggles: next.toggles().to_vec(),
                        terminal,
                    };
                    let (y1, y2) = td_targets(&table, &cons, &tr, true, 2).unwrap();
                    assert_eq!(y1, q1);
                    assert_eq!(y2, table.q2(&s, first).unwrap()[second]);
                    checked += 1;
                    if !terminal {
                        frontier.push(next);
                    }
                }
            }
        }
        assert!(checked > 0);
    }
}

fn quick_hyper(episodes: usize, seed: u64) -> DqnHyper {
    DqnHyper { episodes, batch: 16, replay_capacity: 1000, target_sync: 50, lr: 0.01, seed, ..Default::default() }
}

#[test]
fn zero_learning_rate_keeps_initial_weights() {
    let (model, graphs) = trained_target();
    let insts: Vec<AttackInstance> = graphs
        .iter()
        .enumerate()
        .map(|(id, g)| AttackInstance { id, graph: g, target: None, label: model.predict(g, None).unwrap().class })
        .collect();
    let setup = AttackSetup { indicator: EXPLICIT, budget: 2, threat: ThreatModel::PbaD, seed: 0 };
    let cfg = QConfig::graph_task(2, 4);
    let hyper = DqnHyper { lr: 0.0, ..quick_hyper(30, 3) };
    let (q, log) = train_agent(&insts, &model, &setup, cfg, &hyper).unwrap();
    assert!(log.updates > 0);
    assert_eq!(q, QNetworks::init(cfg, crate::seed::mix(3, 0)).unwrap());
    // determinism with a real learning rate
    let a = train_agent(&insts, &model, &setup, cfg, &quick_hyper(20, 4)).unwrap();
    let b = train_agent(&insts, &model, &setup, cfg, &quick_hyper(20, 4)).unwrap();
    assert_eq!(a.0, b.0);
    assert_eq!(a.1, b.1);
}

#[test]
fn evaluation_keeps_the_best_greedy_snapshot() {
    let (model, graphs) = trained_target();
    let insts: Vec<AttackInstance> = graphs
        .iter()
        .enumerate()
        .map(|(id, g)| AttackInstance { id, graph: g, target: None, label: model.predict(g, None).unwrap().class })
        .collect();
    let setup = AttackSetup { indicator: EXPLICIT, budget: 2, threat: ThreatModel::PbaD, seed: 0 };
    let cfg = QConfig::graph_task(2, 4);
    let hyper = DqnHyper { eval_every: 7, ..quick_hyper(30, 5) };
    let (q, log) = train_agent(&insts, &model, &setup, cfg, &hyper).unwrap();
    let episodes: Vec<usize> = log.evals.iter().map(|e| e.0).collect();
    assert_eq!(episodes, [7, 14, 21, 28, 30]);
    let best = log.evals.iter().map(|e| e.1).fold(f64::NEG_INFINITY, f64::max);
    let first_best = log.evals.iter().find(|e| e.1 == best).unwrap().0;
    assert_eq!(log.kept_episode, first_best);

    let handle = ModelHandle::new(&model, ThreatModel::PbaD);
    let pool: Vec<AttackInstance> = insts.iter().copied().filter(|i| model.predict(i.graph, None).unwrap().class == i.label).collect();
    let cons: Vec<Constraint> = pool.iter().map(|i| Constraint::new(EXPLICIT, 2, i.graph, None).unwrap()).collect();
    assert_eq!(greedy_score(&q, &pool, &cons, &hyper, &handle).unwrap(), best);

    let (_, plain) = train_agent(&insts, &model, &setup, cfg, &DqnHyper { eval_every: 0, ..hyper }).unwrap();
    assert!(plain.evals.is_empty());
    assert_eq!(plain.kept_episode, 30);
    assert_eq!(plain.rewards, log.rewards);
}

#[test]
fn training_needs_label_access() {
    let (model, graphs) = trained_target();
    let insts = [AttackInstance { id: 0, graph: &graphs[0], target: None, label: 0 }];
    let setup = AttackSetup { indicator: EXPLICIT, budget: 1, threat: ThreatModel::Rba, seed: 0 };
    let err = train_agent(&insts, &model, &setup, QConfig::graph_task(1, 2), &quick_hyper(1, 0)).unwrap_err();
    assert!(matches!(err, Error::ThreatModelViolation(_)));
}

#[test]
fn learns_a_known_winning_edge() {
    // find an instance where a minority of single toggles flips the model
    let mut chosen = None;
    for seed in 0..400 {
        let model = GnnModel::init(GnnConfig::s2v(2, 6, 3), seed).unwrap();
        let g = erdos_renyi(7, 0.3, 3000 + seed).unwrap();
        let label = model.predict(&g, None).unwrap().class;
        let cons = Constraint::new(EXPLICIT, 1, &g, None).unwrap();
        let valid = cons.valid_toggles(&g);
        let winners: Vec<Edge> = valid.iter().copied().filter(|e| model.predict(&g.toggled(&[*e]), None).unwrap().class != label).collect();
        if !winners.is_empty() && winners.len() * 3 <= valid.len() {
            chosen = Some((model, g, label, winners));
            break;
        }
    }
    let (model, g, label, winners) = chosen.expect("an instance with rare winning edges");
    let inst = AttackInstance { id: 0, graph: &g, target: None, label };
    let cons = Constraint::new(EXPLICIT, 1, &g, None).unwrap();
    let oracle = Exhaustive::default().search(&inst, &cons, &ModelHandle::new(&model, ThreatModel::PbaD)).unwrap();
    assert!(oracle.is_some_and(|set| winners.contains(&set[0])));

    let setup = AttackSetup { indicator: EXPLICIT, budget: 1, threat: ThreatModel::PbaD, seed: 0 };
    let hyper = DqnHyper { episodes: 2000, batch: 32, replay_capacity: 2000, target_sync: 100, lr: 0.005, seed: 1, ..Default::default() };
    let (q, _) = train_agent(&[inst], &model, &setup, QConfig::graph_task(2, 8), &hyper).unwrap();
    let s = MdpState::initial(&cons, true, 2);
    let a = greedy_action(&q, &s).unwrap();
    assert!(a.edge().is_some_and(|e| winners.contains(&e)), "{a:?} not in {winners:?}");
}

#[test]
fn transfer_attacks_issue_no_queries() {
    let (model, graphs) = trained_target();
    let agent = RlS2v::new(agent(2, 4, 5), PolicyOptions::default());
    let insts: Vec<AttackInstance> = graphs
        .iter()
        .enumerate()
        .map(|(id, g)| AttackInstance { id, graph: g, target: None, label: model.predict(g, None).unwrap().class })
        .collect();
    let setup = AttackSetup { indicator: EXPLICIT, budget: 2, threat: ThreatModel::Rba, seed: 1 };
    let (summary, outcomes) = crate::attack::evaluate_attack(&agent, &insts, &model, &setup).unwrap();
    assert_eq!(summary.total_queries, 0);
    assert!(outcomes.iter().all(|o| o.modifications.len() <= 2));
    let (again, _) = crate::attack::evaluate_attack(&agent, &insts, &model, &setup).unwrap();
    assert_eq!(summary, again);
}
