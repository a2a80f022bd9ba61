//! Experiment configuration: one TOML document with a section per module.
//!
//! Every random stream is derived from the top-level `seed`; sections carry
//! no seeds of their own.

use std::fmt;
use std::path::{Path, PathBuf};

use graphadv_core::attack::{EquivalencyIndicator, GoldClassifier, ThreatModel};
use graphadv_core::baseline::{Exhaustive, GeneticConfig, GradArgmax};
use graphadv_core::dataset::{BlobDensity, ComponentDatasetConfig, Composition, NodeDatasetConfig, SplitSizes};
use graphadv_core::gnn::{Arch, GnnConfig, TrainHyper};
use graphadv_core::optim::OptimizerKind;
use graphadv_core::rl::{DqnHyper, RewardMode};
use graphadv_core::seed;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{self, HarnessError, Result};
use crate::pairing::{self, Method};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskKind {
    /// Inductive graph classification on the component-counting data.
    Graph,
    /// Transductive node classification on one shared graph.
    Node,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub task: TaskKind,
    /// Output directory; not part of the config hash.
    pub out: PathBuf,
    pub data: DataConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub indicator: EquivalencyIndicator,
    pub attack: AttackConfig,
    pub defense: DefenseConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 0,
            task: TaskKind::Graph,
            out: PathBuf::from("runs/graph-desk"),
            data: DataConfig::default(),
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            indicator: EquivalencyIndicator::Explicit { gold: GoldClassifier::ComponentCount },
            attack: AttackConfig::default(),
            defense: DefenseConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// Inclusive node-count ranges; one dataset per bucket.
    pub buckets: Vec<[usize; 2]>,
    pub per_class: usize,
    pub classes: Vec<usize>,
    pub splits: SplitSizes,
    pub min_blob: usize,
    pub composition: Composition,
    pub density: BlobDensity,
    pub max_attempts: usize,
    pub node: NodeDataConfig,
}

impl Default for DataConfig {
    fn default() -> Self {
        let c = ComponentDatasetConfig::default();
        DataConfig {
            buckets: vec![[c.min_nodes, c.max_nodes]],
            per_class: c.per_class,
            classes: c.classes,
            splits: c.splits,
            min_blob: c.min_blob,
            composition: c.composition,
            density: c.density,
            max_attempts: c.max_attempts,
            node: NodeDataConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NodeDataConfig {
    pub num_nodes: usize,
    pub num_classes: usize,
    pub degree_in: f64,
    pub degree_out: f64,
    pub feature_dim: usize,
    pub feature_on: f64,
    pub feature_noise: f64,
    pub splits: SplitSizes,
}

impl Default for NodeDataConfig {
    fn default() -> Self {
        let n = NodeDatasetConfig::default();
        NodeDataConfig {
            num_nodes: n.num_nodes,
            num_classes: n.num_classes,
            degree_in: n.degree_in,
            degree_out: n.degree_out,
            feature_dim: n.feature_dim,
            feature_on: n.feature_on,
            feature_noise: n.feature_noise,
            splits: n.splits,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub arch: Arch,
    /// Propagation depths `K`; one model per depth.
    pub depths: Vec<usize>,
    pub embed_dim: usize,
    pub alpha_node_limit: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig { arch: Arch::S2v, depths: vec![2], embed_dim: 32, alpha_node_limit: 512 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub lr: f64,
    pub epochs: usize,
    pub batch: usize,
    pub optimizer: OptimizerKind,
    pub edge_drop_rate: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { lr: 0.01, epochs: 150, batch: 32, optimizer: OptimizerKind::adam(), edge_drop_rate: 0.0 }
    }
}

/// One attacked-accuracy row: a method under a threat model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub method: Method,
    pub threat: ThreatModel,
}

impl RunSpec {
    pub const fn new(method: Method, threat: ThreatModel) -> Self {
        RunSpec { method, threat }
    }

    /// `<method>-<threat>`, used for file names.
    pub fn slug(&self) -> String {
        format!("{}-{}", self.method.as_str(), self.threat.as_str().to_ascii_lowercase())
    }
}

impl fmt::Display for RunSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.method.as_str(), self.threat.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttackConfig {
    pub budget: usize,
    pub runs: Vec<RunSpec>,
    pub gradargmax: GradArgmax,
    pub genetic: GeneticConfig,
    pub exhaust: ExhaustConfig,
    pub rls2v: RlConfig,
}

impl Default for AttackConfig {
    fn default() -> Self {
        use Method::*;
        use ThreatModel::*;
        AttackConfig {
            budget: 16,
            runs: vec![
                RunSpec::new(Identity, PbaD),
                RunSpec::new(Rand, PbaD),
                RunSpec::new(GradArgmax, Wba),
                RunSpec::new(Genetic, PbaC),
                RunSpec::new(RlS2v, PbaD),
                RunSpec::new(Identity, Rba),
                RunSpec::new(Rand, Rba),
                RunSpec::new(RlS2v, Rba),
            ],
            gradargmax: Default::default(),
            genetic: GeneticConfig::default(),
            exhaust: ExhaustConfig::default(),
            rls2v: RlConfig::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExhaustConfig {
    pub subsets: bool,
    pub cap: u64,
}

impl Default for ExhaustConfig {
    fn default() -> Self {
        let e = Exhaustive::default();
        ExhaustConfig { subsets: e.subsets, cap: e.cap as u64 }
    }
}

impl From<ExhaustConfig> for Exhaustive {
    fn from(c: ExhaustConfig) -> Self {
        Exhaustive { subsets: c.subsets, cap: c.cap as u128 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RlConfig {
    /// S2V depth of the Q-networks.
    pub depth: usize,
    pub embed_dim: usize,
    pub hidden_dim: usize,
    /// Threat model the agent is trained under when a run needs a
    /// transferred agent (RBA).
    pub train_threat: ThreatModel,
    pub episodes: usize,
    pub lr: f64,
    pub optimizer: OptimizerKind,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    pub epsilon_decay: f64,
    pub replay_capacity: usize,
    pub batch: usize,
    pub target_sync: usize,
    pub reward: RewardMode,
    pub allow_noop: bool,
    pub ball_hops: usize,
    pub eval_every: usize,
}

impl Default for RlConfig {
    fn default() -> Self {
        let h = DqnHyper::default();
        RlConfig {
            depth: 2,
            embed_dim: 32,
            hidden_dim: 32,
            train_threat: ThreatModel::PbaD,
            episodes: h.episodes,
            lr: h.lr,
            optimizer: h.optimizer,
            epsilon_start: h.epsilon_start,
            epsilon_end: h.epsilon_end,
            epsilon_decay: h.epsilon_decay,
            replay_capacity: h.replay_capacity,
            batch: h.batch,
            target_sync: h.target_sync,
            reward: h.reward,
            allow_noop: false,
            ball_hops: h.ball_hops,
            eval_every: h.eval_every,
        }
    }
}

impl RlConfig {
    pub fn hyper(&self, seed: u64) -> DqnHyper {
        DqnHyper {
            episodes: self.episodes,
            lr: self.lr,
            optimizer: self.optimizer,
            epsilon_start: self.epsilon_start,
            epsilon_end: self.epsilon_end,
            epsilon_decay: self.epsilon_decay,
            replay_capacity: self.replay_capacity,
            batch: self.batch,
            target_sync: self.target_sync,
            reward: self.reward,
            allow_noop: self.allow_noop,
            ball_hops: self.ball_hops,
            eval_every: self.eval_every,
            seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DefenseConfig {
    /// Edge-drop rates tried; the best one is kept.
    pub rates: Vec<f64>,
    /// Training seeds per rate.
    pub seeds: usize,
    pub runs: Vec<RunSpec>,
    /// Largest clean-accuracy loss (fraction) a kept rate may cost.
    pub clean_tolerance: f64,
}

impl Default for DefenseConfig {
    fn default() -> Self {
        DefenseConfig {
            rates: vec![0.05, 0.1, 0.2],
            seeds: 5,
            runs: vec![RunSpec::new(Method::GradArgmax, ThreatModel::Wba), RunSpec::new(Method::Genetic, ThreatModel::PbaC)],
            clean_tolerance: 0.02,
        }
    }
}

/// Named seed streams derived from the top-level seed.
pub mod stream {
    pub const DATA: u64 = 1;
    pub const TRAIN: u64 = 2;
    pub const ATTACK: u64 = 3;
    pub const AGENT: u64 = 4;
    pub const DEFENSE: u64 = 1000;
}

impl ExperimentConfig {
    /// The desk-scale node-classification experiment.
    pub fn node_default() -> Self {
        use Method::*;
        use ThreatModel::*;
        ExperimentConfig {
            task: TaskKind::Node,
            out: PathBuf::from("runs/node-desk"),
            model: ModelConfig { arch: Arch::Gcn, depths: vec![2], embed_dim: 16, alpha_node_limit: 512 },
            train: TrainConfig { epochs: 200, batch: 150, ..TrainConfig::default() },
            indicator: EquivalencyIndicator::SmallMod { m: 1, b: 2, deletions_only: true },
            attack: AttackConfig {
                budget: 1,
                runs: vec![
                    RunSpec::new(Identity, PbaD),
                    RunSpec::new(Rand, PbaD),
                    RunSpec::new(GradArgmax, Wba),
                    RunSpec::new(Genetic, PbaC),
                    RunSpec::new(RlS2v, PbaD),
                    RunSpec::new(Exhaust, PbaD),
                ],
                rls2v: RlConfig { allow_noop: true, ..RlConfig::default() },
                ..AttackConfig::default()
            },
            ..ExperimentConfig::default()
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        toml::to_string(&cfg).map_err(|e| HarnessError::Config(format!("value not representable in TOML: {e}")))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = error::read_to_string(path).map_err(|e| match e {
            HarnessError::Missing(p) => HarnessError::Config(format!("config file {} not found", p.display())),
            e => e,
        })?;
        Self::parse(&text).map_err(|e| match e {
            HarnessError::Config(m) => HarnessError::Config(format!("{}: {m}", path.display())),
            e => e,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// First 16 hex digits of the SHA-256 of the canonical TOML, with `out`
    /// cleared.
    pub fn hash(&self) -> String {
        let canonical = ExperimentConfig { out: PathBuf::new(), ..self.clone() }.to_toml();
        hex::encode(&Sha256::digest(canonical.as_bytes())[..8])
    }

    pub fn derived_seed(&self, stream: u64) -> u64 {
        seed::mix(self.seed, stream)
    }

    /// Checks internal consistency. Illegal method/threat pairings are
    /// threat-model errors, everything else is a config error.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(HarnessError::Config(m));
        match (self.task, self.model.arch) {
            (TaskKind::Graph, Arch::S2v) | (TaskKind::Node, Arch::Gcn) => {}
            (t, a) => return bad(format!("task {t:?} cannot use model arch {a:?}")),
        }
        match (self.task, self.indicator) {
            (TaskKind::Graph, EquivalencyIndicator::Explicit { .. }) => {}
            (TaskKind::Node, EquivalencyIndicator::SmallMod { m, .. }) => {
                if self.attack.budget > m {
                    return bad(format!("attack budget {} exceeds the indicator's m = {m}", self.attack.budget));
                }
            }
            (t, i) => return bad(format!("task {t:?} cannot use indicator {i:?}")),
        }
        self.indicator.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        if self.seed > i64::MAX as u64 {
            return bad(format!("seed must be at most {}, got {}", i64::MAX, self.seed));
        }
        if self.attack.budget == 0 {
            return bad("attack budget must be at least 1".into());
        }
        if self.task == TaskKind::Graph && (self.data.buckets.is_empty() || self.data.buckets.iter().any(|[a, b]| a > b || *a == 0)) {
            return bad(format!("size buckets must be non-empty ranges, got {:?}", self.data.buckets));
        }
        if self.model.depths.is_empty() || self.model.depths.contains(&0) {
            return bad("model depths must be a non-empty list of positive values".into());
        }
        for (i, cfg) in self.gnn_configs(1).iter().enumerate() {
            cfg.validate().map_err(|e| HarnessError::Config(format!("model depth #{i}: {e}")))?;
        }
        if !(0.0..1.0).contains(&self.train.edge_drop_rate) || self.defense.rates.iter().any(|r| !(0.0..1.0).contains(r)) {
            return bad("edge drop rates must lie in [0, 1)".into());
        }
        self.attack.genetic.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        self.attack.rls2v.hyper(0).validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        if !(1..=5).contains(&self.attack.rls2v.depth) {
            return bad(format!("agent depth must lie in 1..=5, got {}", self.attack.rls2v.depth));
        }
        if self.attack.rls2v.train_threat == ThreatModel::Rba {
            return bad("the agent cannot be trained under RBA (no labels)".into());
        }
        if let Some(run) = self.defense.runs.iter().find(|r| r.method == Method::RlS2v) {
            return bad(format!("defense runs cannot include {run}; agents are trained by `attack`"));
        }
        for run in self.attack.runs.iter().chain(&self.defense.runs) {
            pairing::check(run.method, run.threat)?;
        }
        Ok(())
    }

    /// Target-model configs, one per depth. `input_dim` is the node
    /// feature width of the data.
    pub fn gnn_configs(&self, input_dim: usize) -> Vec<GnnConfig> {
        let classes = match self.task {
            TaskKind::Graph => self.data.classes.iter().copied().max().unwrap_or(0),
            TaskKind::Node => self.data.node.num_classes,
        };
        self.model
            .depths
            .iter()
            .map(|&depth| GnnConfig {
                arch: self.model.arch,
                depth,
                embed_dim: self.model.embed_dim,
                num_classes: classes,
                input_dim,
                alpha_node_limit: self.model.alpha_node_limit,
            })
            .collect()
    }

    pub fn train_hyper(&self, seed: u64, edge_drop_rate: f64) -> TrainHyper {
        TrainHyper {
            lr: self.train.lr,
            epochs: self.train.epochs,
            batch: self.train.batch,
            seed,
            edge_drop_rate,
            optimizer: self.train.optimizer,
        }
    }

    pub fn component_config(&self, bucket: usize) -> ComponentDatasetConfig {
        let [min_nodes, max_nodes] = self.data.buckets[bucket];
        ComponentDatasetConfig {
            min_nodes,
            max_nodes,
            per_class: self.data.per_class,
            classes: self.data.classes.clone(),
            splits: self.data.splits,
            min_blob: self.data.min_blob,
            composition: self.data.composition,
            density: self.data.density,
            max_attempts: self.data.max_attempts,
            seed: seed::mix(self.derived_seed(stream::DATA), bucket as u64),
        }
    }

    pub fn node_config(&self) -> NodeDatasetConfig {
        let n = &self.data.node;
        NodeDatasetConfig {
            num_nodes: n.num_nodes,
            num_classes: n.num_classes,
            degree_in: n.degree_in,
            degree_out: n.degree_out,
            feature_dim: n.feature_dim,
            feature_on: n.feature_on,
            feature_noise: n.feature_noise,
            splits: n.splits,
            seed: self.derived_seed(stream::DATA),
        }
    }

    /// Dataset labels, e.g. `15-20` for a size bucket or `n2000`.
    pub fn bucket_labels(&self) -> Vec<String> {
        match self.task {
            TaskKind::Graph => self.data.buckets.iter().map(|[a, b]| format!("{a}-{b}")).collect(),
            TaskKind::Node => vec![format!("n{}", self.data.node.num_nodes)],
        }
    }
}
