//! Mini-batch training with optional global edge drop.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, SplitName, Task};
use crate::error::{Error, Result};
use crate::gnn::{Arch, GnnConfig, GnnModel, Target};
use crate::graph::Graph;
use crate::optim::{Optimizer, OptimizerKind};
use crate::seed::{self, Rng};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainHyper {
    pub lr: f64,
    pub epochs: usize,
    pub batch: usize,
    pub seed: u64,
    /// Fraction of edges removed, independently per training step.
    pub edge_drop_rate: f64,
    pub optimizer: OptimizerKind,
}

impl Default for TrainHyper {
    fn default() -> Self {
        TrainHyper { lr: 0.01, epochs: 100, batch: 32, seed: 0, edge_drop_rate: 0.0, optimizer: OptimizerKind::Sgd }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainReport {
    /// Mean training loss per epoch.
    pub loss_curve: Vec<f64>,
    pub steps: usize,
    /// Number of times a fresh edge-drop mask was drawn.
    pub drop_resamples: usize,
}

/// Removes each edge independently with probability `rate`. Draws nothing
/// when `rate` is zero.
pub fn drop_edges(g: &Graph, rate: f64, rng: &mut Rng) -> Graph {
    if rate <= 0.0 {
        return g.clone();
    }
    g.retain_edges(|_| rng.gen::<f64>() >= rate)
}

pub fn train(ds: &Dataset, cfg: &GnnConfig, hyper: &TrainHyper) -> Result<(GnnModel, TrainReport)> {
    cfg.validate()?;
    match (cfg.arch, ds.task) {
        (Arch::S2v, Task::InductiveGraph) | (Arch::Gcn, Task::TransductiveNode) => {}
        (arch, task) => return Err(Error::TaskMismatch(alloc::format!("{arch:?} model on {task:?} data"))),
    }
    if ds.splits.train.is_empty() {
        return Err(Error::EmptyTrainingSplit);
    }
    if !(0.0..1.0).contains(&hyper.edge_drop_rate) || hyper.batch == 0 {
        return Err(Error::InvalidArgument("edge_drop_rate must be in [0, 1) and batch >= 1".into()));
    }
    let mut model = GnnModel::init(cfg.clone(), seed::mix(hyper.seed, 0))?;
    let mut order_rng = seed::stream(hyper.seed, 1);
    let mut drop_rng = seed::stream(hyper.seed, 2);
    let mut opt = Optimizer::new(hyper.optimizer, hyper.lr);
    let mut report = TrainReport { loss_curve: Vec::with_capacity(hyper.epochs), steps: 0, drop_resamples: 0 };
    let mut order: Vec<usize> = ds.split(SplitName::Train).map(|(i, _)| i).collect();

    for _ in 0..hyper.epochs {
        order.shuffle(&mut order_rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(hyper.batch) {
            let w = 1.0 / chunk.len() as f64;
            let mut grads = model.params.zeros_like();
            match ds.task {
                Task::InductiveGraph => {
                    for &i in chunk {
                        let inst = &ds.instances[i];
                        let g = step_graph(ds.graph_of(inst), hyper.edge_drop_rate, &mut drop_rng, &mut report);
                        let t = Target { node: inst.target, label: inst.label, weight: w };
                        epoch_loss += model.accumulate_gradients(&g, &[t], &mut grads)? / w;
                    }
                }
                Task::TransductiveNode => {
                    let g = step_graph(&ds.graphs[0], hyper.edge_drop_rate, &mut drop_rng, &mut report);
                    let targets: Vec<Target> =
                        chunk.iter().map(|&i| Target { node: ds.instances[i].target, label: ds.instances[i].label, weight: w }).collect();
                    epoch_loss += model.accumulate_gradients(&g, &targets, &mut grads)? * chunk.len() as f64;
                }
            }
            opt.step(&mut model.params, &grads)?;
            report.steps += 1;
        }
        report.loss_curve.push(epoch_loss / order.len() as f64);
    }
    Ok((model, report))
}

fn step_graph(g: &Graph, rate: f64, rng: &mut Rng, report: &mut TrainReport) -> Graph {
    if rate > 0.0 {
        report.drop_resamples += 1;
    }
    drop_edges(g, rate, rng)
}

/// Fraction of instances in `split` predicted correctly.
pub fn accuracy(model: &GnnModel, ds: &Dataset, split: SplitName) -> Result<f64> {
    let idx = ds.splits.get(split);
    if idx.is_empty() {
        return Ok(0.0);
    }
    let correct = match ds.task {
        Task::InductiveGraph => {
            let mut c = 0;
            for &i in idx {
                let inst = &ds.instances[i];
                if model.predict(ds.graph_of(inst), inst.target)?.class == inst.label {
                    c += 1;
                }
            }
            c
        }
        Task::TransductiveNode => {
            let nodes: Vec<usize> = idx.iter().map(|&i| ds.instances[i].target.ok_or(Error::MissingTarget)).collect::<Result<_>>()?;
            let logits = model.logits_many(&ds.graphs[0], &nodes)?;
            idx.iter().zip(&logits).filter(|(&i, l)| crate::linalg::argmax(l) == Some(ds.instances[i].label)).count()
        }
    };
    Ok(correct as f64 / idx.len() as f64)
}
