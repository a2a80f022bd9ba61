//! The five commands: data generation, target training, attack sweeps,
//! edge-drop defense and report rendering.
//!
//! Output layout under the configured directory:
//!
//! ```text
//! config.toml
//! data/<bucket>/                     manifest.txt, graphs/
//! models/<cell>/                     model.ckpt, model.json, loss.csv, clean.json
//! agents/<cell>-<threat>/            agent.ckpt, agent.json, rewards.csv, evals.csv
//! outcomes/<cell>/<method-threat>.jsonl
//! report/                            attack.csv, attack.txt, diffs/<cell>/<method-threat>/<instance>.csv
//! defense/<cell>/                    r<rate>_s<seed>/, comparison.csv, comparison.txt, summary.json
//! ```
//!
//! A cell is one size bucket and one model depth, e.g. `15-20_k2`. Cells are
//! independent and each writes only below its own directories. Nothing
//! written depends on wall-clock time, so re-runs are byte-identical.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use graphadv_core::attack::{
    evaluate_attack, verify_outcome, AttackInstance, AttackSetup, Attacker, EquivalencyIndicator, NoAttack, ThreatModel,
};
use graphadv_core::baseline::{Exhaustive, Genetic, RandSampling};
use graphadv_core::dataset::{gen_component_dataset, gen_node_dataset, Dataset, SplitName, Task};
use graphadv_core::gnn::{self, train::accuracy, GnnConfig, GnnModel, TrainHyper, TrainReport};
use graphadv_core::rl::{train_agent, DqnHyper, PolicyOptions, QConfig, QNetworks, RlS2v};
use graphadv_core::seed;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::checkpoint;
use crate::config::{stream, ExperimentConfig, RunSpec, TaskKind};
use crate::error::{self, HarnessError, Result};
use crate::formats::{self, Stamp};
use crate::logs::{RunInfo, RunLog};
use crate::pairing::{self, Method};
use crate::report::{self, ReportTable};

/// Paths of every artifact below an output directory.
#[derive(Clone, Debug)]
pub struct Layout {
    pub root: PathBuf,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Layout { root: root.into() }
    }

    pub fn config(&self) -> PathBuf {
        self.root.join("config.toml")
    }

    pub fn data(&self, bucket: &str) -> PathBuf {
        self.root.join("data").join(bucket)
    }

    pub fn model(&self, cell: &str) -> PathBuf {
        self.root.join("models").join(cell)
    }

    pub fn agent(&self, cell: &str, threat: ThreatModel) -> PathBuf {
        self.root.join("agents").join(format!("{cell}-{}", threat.as_str().to_ascii_lowercase()))
    }

    pub fn outcomes(&self) -> PathBuf {
        self.root.join("outcomes")
    }

    pub fn outcome_log(&self, cell: &str, run: &RunSpec) -> PathBuf {
        self.outcomes().join(cell).join(format!("{}.jsonl", run.slug()))
    }

    pub fn report(&self) -> PathBuf {
        self.root.join("report")
    }

    pub fn defense(&self, cell: &str) -> PathBuf {
        self.root.join("defense").join(cell)
    }
}

pub fn cell_name(bucket: &str, depth: usize) -> String {
    format!("{bucket}_k{depth}")
}

/// Test I for every threat model except RBA, which uses test II.
pub fn split_for(threat: ThreatModel) -> SplitName {
    if threat == ThreatModel::Rba {
        SplitName::TestIi
    } else {
        SplitName::TestI
    }
}

pub fn instances(ds: &Dataset, split: SplitName) -> Vec<AttackInstance<'_>> {
    ds.split(split).map(|(id, inst)| AttackInstance { id, graph: ds.graph_of(inst), target: inst.target, label: inst.label }).collect()
}

fn input_dim(ds: &Dataset) -> usize {
    ds.graphs.first().map_or(1, |g| g.node_dim().max(1))
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializes");
    s.push('\n');
    s
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    layout: Layout,
    stamp: Stamp,
}

impl<'a> Ctx<'a> {
    /// Validates the config and records it next to the outputs.
    fn new(cfg: &'a ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let ctx = Ctx { cfg, layout: Layout::new(&cfg.out), stamp: Stamp { config_hash: cfg.hash(), seed: cfg.seed } };
        error::write(&ctx.layout.config(), format!("{}{}", ctx.stamp.comment(), cfg.to_toml()))?;
        Ok(ctx)
    }

    fn setup(&self, threat: ThreatModel) -> AttackSetup {
        AttackSetup { indicator: self.cfg.indicator, budget: self.cfg.attack.budget, threat, seed: self.cfg.derived_seed(stream::ATTACK) }
    }

    fn load_data(&self, bucket: &str) -> Result<Dataset> {
        formats::read_dataset(&self.layout.data(bucket))
    }

    /// `(bucket, cell, target-model config)` for every cell of a dataset.
    fn cells(&self, bucket: &str, ds: &Dataset) -> Vec<(String, GnnConfig)> {
        self.cfg.gnn_configs(input_dim(ds)).into_iter().map(|g| (cell_name(bucket, g.depth), g)).collect()
    }

    fn info(&self, method: Method, bucket: &str, depth: usize, threat: ThreatModel) -> RunInfo {
        RunInfo {
            method,
            bucket: bucket.to_string(),
            depth,
            split: split_for(threat).as_str().to_string(),
            budget: self.cfg.attack.budget,
            config: self.stamp.config_hash.clone(),
            seed: self.stamp.seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DataSummary {
    pub bucket: String,
    pub graphs: usize,
    pub instances: usize,
    pub train: usize,
    pub test_i: usize,
    pub test_ii: usize,
}

/// Gold labels must equal the component count (graph task); node data
/// must satisfy every dataset invariant.
pub fn verify_gold(ds: &Dataset) -> Result<()> {
    ds.validate()?;
    if ds.task == Task::InductiveGraph {
        for (i, inst) in ds.instances.iter().enumerate() {
            let k = ds.graph_of(inst).connected_components();
            if k != inst.label + ds.label_base {
                return Err(graphadv_core::Error::Generation(format!(
                    "instance {i} is labelled {} but has {k} components",
                    inst.label + ds.label_base
                ))
                .into());
            }
        }
    }
    Ok(())
}

pub fn gen_data(cfg: &ExperimentConfig) -> Result<Vec<DataSummary>> {
    let ctx = Ctx::new(cfg)?;
    let mut out = Vec::new();
    for (i, bucket) in cfg.bucket_labels().into_iter().enumerate() {
        let ds = match cfg.task {
            TaskKind::Graph => gen_component_dataset(&cfg.component_config(i))?,
            TaskKind::Node => gen_node_dataset(&cfg.node_config())?,
        };
        verify_gold(&ds)?;
        formats::write_dataset(&ctx.layout.data(&bucket), &ds, &ctx.stamp)?;
        out.push(DataSummary {
            bucket,
            graphs: ds.graphs.len(),
            instances: ds.instances.len(),
            train: ds.splits.train.len(),
            test_i: ds.splits.test_i.len(),
            test_ii: ds.splits.test_ii.len(),
        });
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CleanReport {
    pub config: String,
    pub seed: u64,
    pub bucket: String,
    pub depth: usize,
    pub edge_drop_rate: f64,
    pub train: f64,
    #[serde(rename = "test_I")]
    pub test_i: f64,
    #[serde(rename = "test_II")]
    pub test_ii: f64,
}

#[derive(Serialize)]
struct ModelCard<'a> {
    config: &'a str,
    seed: u64,
    steps: usize,
    drop_resamples: usize,
    model: &'a GnnConfig,
    train: &'a TrainHyper,
}

/// Trains one target model and writes its directory.
fn fit(ctx: &Ctx<'_>, ds: &Dataset, bucket: &str, gnn_cfg: &GnnConfig, hyper: &TrainHyper, dir: &Path) -> Result<(GnnModel, CleanReport)> {
    let (model, rep): (GnnModel, TrainReport) = gnn::train(ds, gnn_cfg, hyper)?;
    checkpoint::save(&dir.join("model.ckpt"), &model.params)?;
    let card = ModelCard {
        config: &ctx.stamp.config_hash,
        seed: ctx.stamp.seed,
        steps: rep.steps,
        drop_resamples: rep.drop_resamples,
        model: gnn_cfg,
        train: hyper,
    };
    error::write(&dir.join("model.json"), to_json(&card))?;
    let mut loss = format!("{}epoch,loss\n", ctx.stamp.comment());
    for (i, l) in rep.loss_curve.iter().enumerate() {
        loss.push_str(&format!("{},{l:?}\n", i + 1));
    }
    error::write(&dir.join("loss.csv"), loss)?;
    let clean = CleanReport {
        config: ctx.stamp.config_hash.clone(),
        seed: ctx.stamp.seed,
        bucket: bucket.to_string(),
        depth: gnn_cfg.depth,
        edge_drop_rate: hyper.edge_drop_rate,
        train: accuracy(&model, ds, SplitName::Train)?,
        test_i: accuracy(&model, ds, SplitName::TestI)?,
        test_ii: accuracy(&model, ds, SplitName::TestIi)?,
    };
    error::write(&dir.join("clean.json"), to_json(&clean))?;
    Ok((model, clean))
}

pub fn train(cfg: &ExperimentConfig) -> Result<Vec<CleanReport>> {
    let ctx = Ctx::new(cfg)?;
    let mut out = Vec::new();
    for bucket in cfg.bucket_labels() {
        let ds = ctx.load_data(&bucket)?;
        for (cell, gnn_cfg) in ctx.cells(&bucket, &ds) {
            let hyper = cfg.train_hyper(cfg.derived_seed(stream::TRAIN), cfg.train.edge_drop_rate);
            out.push(fit(&ctx, &ds, &bucket, &gnn_cfg, &hyper, &ctx.layout.model(&cell))?.1);
        }
    }
    Ok(out)
}

fn load_model(dir: &Path, gnn_cfg: &GnnConfig) -> Result<GnnModel> {
    let path = dir.join("model.ckpt");
    let params = checkpoint::load(&path)?;
    GnnModel::from_params(gnn_cfg.clone(), params).map_err(|e| HarnessError::format(&path, e.to_string()))
}

/// Everything an agent's training depends on. A stored agent is reused only
/// when its manifest matches.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentManifest {
    pub config: String,
    pub threat: ThreatModel,
    pub budget: usize,
    pub indicator: EquivalencyIndicator,
    pub split: String,
    pub split_fingerprint: String,
    pub model_fingerprint: String,
    pub qconfig: QConfig,
    pub options: PolicyOptions,
    pub hyper: DqnHyper,
}

impl AgentManifest {
    fn same_training(&self, other: &AgentManifest) -> bool {
        AgentManifest { config: String::new(), ..self.clone() } == AgentManifest { config: String::new(), ..other.clone() }
    }
}

/// Hash of the graphs, targets and labels of a split.
pub fn split_fingerprint(ds: &Dataset, split: SplitName) -> String {
    let mut graph_hash: BTreeMap<usize, String> = BTreeMap::new();
    let mut h = Sha256::new();
    for (id, inst) in ds.split(split) {
        let gh = graph_hash.entry(inst.graph).or_insert_with(|| sha256_hex(formats::write_graph(&ds.graphs[inst.graph], None).as_bytes()));
        h.update(format!("{id} {gh} {:?} {}\n", inst.target, inst.label).as_bytes());
    }
    hex::encode(h.finalize())
}

fn agent_qconfig(cfg: &ExperimentConfig, ds: &Dataset) -> QConfig {
    let r = &cfg.attack.rls2v;
    QConfig {
        depth: r.depth,
        embed_dim: r.embed_dim,
        hidden_dim: r.hidden_dim,
        feature_dim: ds.graphs.first().map_or(0, |g| g.node_dim()),
        node_task: cfg.task == TaskKind::Node,
    }
}

/// Loads the agent for `(cell, threat)` or trains it on test I.
fn agent(ctx: &Ctx<'_>, ds: &Dataset, model: &GnnModel, cell: &str, threat: ThreatModel) -> Result<RlS2v> {
    let cfg = ctx.cfg;
    let threat_index = ThreatModel::ALL.iter().position(|&t| t == threat).unwrap_or(0) as u64;
    let hyper = cfg.attack.rls2v.hyper(seed::mix(cfg.derived_seed(stream::AGENT), threat_index));
    let manifest = AgentManifest {
        config: ctx.stamp.config_hash.clone(),
        threat,
        budget: cfg.attack.budget,
        indicator: cfg.indicator,
        split: SplitName::TestI.as_str().to_string(),
        split_fingerprint: split_fingerprint(ds, SplitName::TestI),
        model_fingerprint: sha256_hex(&checkpoint::encode(&model.params)),
        qconfig: agent_qconfig(cfg, ds),
        options: PolicyOptions::from(&hyper),
        hyper,
    };
    let dir = ctx.layout.agent(cell, threat);
    if let Some(q) = stored_agent(&dir, &manifest) {
        return Ok(RlS2v::new(q, manifest.options));
    }
    let setup = ctx.setup(threat);
    let (q, log) = train_agent(&instances(ds, SplitName::TestI), model, &setup, manifest.qconfig, &hyper)?;
    checkpoint::save(&dir.join("agent.ckpt"), &q.params)?;
    error::write(&dir.join("agent.json"), to_json(&manifest))?;
    let mut rewards = format!("{}episode,reward\n", ctx.stamp.comment());
    for (i, r) in log.rewards.iter().enumerate() {
        rewards.push_str(&format!("{},{r:?}\n", i + 1));
    }
    error::write(&dir.join("rewards.csv"), rewards)?;
    let mut evals = format!("{}episode,greedy_reward,kept\n", ctx.stamp.comment());
    for (ep, r) in &log.evals {
        evals.push_str(&format!("{ep},{r:?},{}\n", u8::from(*ep == log.kept_episode)));
    }
    error::write(&dir.join("evals.csv"), evals)?;
    Ok(RlS2v::new(q, manifest.options))
}

fn stored_agent(dir: &Path, want: &AgentManifest) -> Option<QNetworks> {
    let text = std::fs::read_to_string(dir.join("agent.json")).ok()?;
    let have: AgentManifest = serde_json::from_str(&text).ok()?;
    if !have.same_training(want) {
        return None;
    }
    let params = checkpoint::load(&dir.join("agent.ckpt")).ok()?;
    QNetworks::from_params(want.qconfig, params).ok()
}

/// Runs one method on its split and checks every outcome record.
fn run_attack(ctx: &Ctx<'_>, ds: &Dataset, model: &GnnModel, run: RunSpec, info: RunInfo, attacker: &dyn Attacker) -> Result<RunLog> {
    pairing::check(run.method, run.threat)?;
    let insts = instances(ds, split_for(run.threat));
    let setup = ctx.setup(run.threat);
    let (_, outcomes) = evaluate_attack(attacker, &insts, model, &setup)?;
    let log = RunLog::new(info, run.threat, outcomes);
    check_log(&log, ds, &setup)?;
    Ok(log)
}

/// Constraint and capability checks on a whole log: every record admitted
/// by the indicator, a legal pairing, and no queries under RBA.
pub fn check_log(log: &RunLog, ds: &Dataset, setup: &AttackSetup) -> Result<()> {
    pairing::check(log.info.method, log.threat())?;
    for o in &log.outcomes {
        let inst = ds.instances.get(o.instance).ok_or_else(|| HarnessError::Config(format!("unknown instance {}", o.instance)))?;
        if inst.label != o.label || inst.target != o.target {
            return Err(HarnessError::Config(format!("outcome {} does not match the dataset", o.instance)));
        }
        verify_outcome(o, ds.graph_of(inst), setup)?;
    }
    if log.threat() == ThreatModel::Rba && log.summary.total_queries > 0 {
        return Err(HarnessError::ThreatModel(format!(
            "{} issued {} model queries under RBA",
            log.info.method.display_name(),
            log.summary.total_queries
        )));
    }
    Ok(())
}

fn baseline(cfg: &ExperimentConfig, method: Method) -> Option<Box<dyn Attacker>> {
    Some(match method {
        Method::Identity => Box::new(NoAttack),
        Method::Rand => Box::new(RandSampling),
        Method::GradArgmax => Box::new(cfg.attack.gradargmax),
        Method::Genetic => Box::new(Genetic::new(cfg.attack.genetic.clone())),
        Method::Exhaust => Box::new(Exhaustive::from(cfg.attack.exhaust)),
        Method::RlS2v => return None,
    })
}

pub fn attack(cfg: &ExperimentConfig) -> Result<ReportTable> {
    let ctx = Ctx::new(cfg)?;
    for bucket in cfg.bucket_labels() {
        let ds = ctx.load_data(&bucket)?;
        for (cell, gnn_cfg) in ctx.cells(&bucket, &ds) {
            let model = load_model(&ctx.layout.model(&cell), &gnn_cfg)?;
            let mut agents: BTreeMap<ThreatModel, RlS2v> = BTreeMap::new();
            for &run in &cfg.attack.runs {
                let info = ctx.info(run.method, &bucket, gnn_cfg.depth, run.threat);
                let log = match baseline(cfg, run.method) {
                    Some(a) => run_attack(&ctx, &ds, &model, run, info, a.as_ref())?,
                    None => {
                        let train_threat = if run.threat == ThreatModel::Rba { cfg.attack.rls2v.train_threat } else { run.threat };
                        if let std::collections::btree_map::Entry::Vacant(e) = agents.entry(train_threat) {
                            let a = agent(&ctx, &ds, &model, &cell, train_threat)?;
                            e.insert(a);
                        }
                        run_attack(&ctx, &ds, &model, run, info, &agents[&train_threat])?
                    }
                };
                log.write(&ctx.layout.outcome_log(&cell, &run))?;
            }
        }
    }
    render_report(&cfg.out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateResult {
    pub rate: f64,
    /// Test-I clean accuracy per seed.
    pub clean: Vec<f64>,
    /// Attacked accuracy per run slug, per seed.
    pub attacked: BTreeMap<String, Vec<f64>>,
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

impl RateResult {
    pub fn mean_clean(&self) -> f64 {
        mean(&self.clean)
    }

    pub fn mean_attacked(&self, slug: &str) -> f64 {
        self.attacked.get(slug).map_or(0.0, |v| mean(v))
    }

    fn mean_over_runs(&self) -> f64 {
        mean(&self.attacked.values().map(|v| mean(v)).collect::<Vec<_>>())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DefenseReport {
    pub config: String,
    pub seed: u64,
    pub bucket: String,
    pub depth: usize,
    pub seeds: usize,
    pub runs: Vec<String>,
    /// Rate 0 first, then the configured rates.
    pub rates: Vec<RateResult>,
    /// Kept rate: highest mean attacked accuracy over the runs among rates
    /// whose mean clean accuracy is within tolerance; ties to the lower rate.
    pub selected: Option<f64>,
}

impl DefenseReport {
    pub fn undefended(&self) -> &RateResult {
        &self.rates[0]
    }

    pub fn defended(&self) -> Option<&RateResult> {
        self.rates.iter().skip(1).find(|r| Some(r.rate) == self.selected)
    }

    fn select(rates: &[RateResult], tolerance: f64) -> Option<f64> {
        let base = rates.first()?.mean_clean();
        let mut best: Option<&RateResult> = None;
        for r in rates.iter().skip(1).filter(|r| r.mean_clean() >= base - tolerance) {
            if best.is_none_or(|b| r.mean_over_runs() > b.mean_over_runs()) {
                best = Some(r);
            }
        }
        best.map(|r| r.rate)
    }

    pub fn to_text(&self, stamp: &Stamp) -> String {
        let mut grid = vec![{
            let mut h = vec!["rate".to_string(), "clean".to_string()];
            h.extend(self.runs.iter().cloned());
            h.push("kept".to_string());
            h
        }];
        for r in &self.rates {
            let mut line = vec![format!("{}", r.rate), format!("{:.2}", 100.0 * r.mean_clean())];
            line.extend(self.runs.iter().map(|s| format!("{:.2}", 100.0 * r.mean_attacked(s))));
            line.push(if Some(r.rate) == self.selected { "*".into() } else { String::new() });
            grid.push(line);
        }
        report::align(&grid, stamp)
    }

    pub fn to_csv(&self, stamp: &Stamp) -> String {
        let mut w = csv::Writer::from_writer(stamp.comment().into_bytes());
        let mut header = vec!["rate".to_string(), "clean%".to_string()];
        header.extend(self.runs.iter().map(|s| format!("{s} acc%")));
        header.push("kept".into());
        w.write_record(header).expect("in-memory write");
        for r in &self.rates {
            let mut rec = vec![format!("{}", r.rate), format!("{:.2}", 100.0 * r.mean_clean())];
            rec.extend(self.runs.iter().map(|s| format!("{:.2}", 100.0 * r.mean_attacked(s))));
            rec.push((Some(r.rate) == self.selected).to_string());
            w.write_record(rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 records")
    }
}

/// Training seed of defense replicate `s`; replicate 0 reuses the seed of
/// the `train` command.
pub fn defense_seed(cfg: &ExperimentConfig, s: usize) -> u64 {
    if s == 0 {
        cfg.derived_seed(stream::TRAIN)
    } else {
        seed::mix(cfg.derived_seed(stream::DEFENSE), s as u64)
    }
}

pub fn defend(cfg: &ExperimentConfig) -> Result<Vec<DefenseReport>> {
    let ctx = Ctx::new(cfg)?;
    let mut rates = vec![0.0];
    rates.extend(cfg.defense.rates.iter().copied().filter(|&r| r > 0.0));
    let mut out = Vec::new();
    for bucket in cfg.bucket_labels() {
        let ds = ctx.load_data(&bucket)?;
        for (cell, gnn_cfg) in ctx.cells(&bucket, &ds) {
            let root = ctx.layout.defense(&cell);
            let mut results = Vec::new();
            for &rate in &rates {
                let mut res = RateResult { rate, clean: Vec::new(), attacked: BTreeMap::new() };
                for s in 0..cfg.defense.seeds {
                    let dir = root.join(format!("r{rate}_s{s}"));
                    let hyper = cfg.train_hyper(defense_seed(cfg, s), rate);
                    let (model, clean) = fit(&ctx, &ds, &bucket, &gnn_cfg, &hyper, &dir)?;
                    res.clean.push(clean.test_i);
                    for &run in &cfg.defense.runs {
                        let attacker = baseline(cfg, run.method).expect("agents excluded above");
                        let info = ctx.info(run.method, &bucket, gnn_cfg.depth, run.threat);
                        let log = run_attack(&ctx, &ds, &model, run, info, attacker.as_ref())?;
                        log.write(&dir.join(format!("{}.jsonl", run.slug())))?;
                        res.attacked.entry(run.slug()).or_default().push(log.summary.attacked_accuracy);
                    }
                }
                results.push(res);
            }
            let report = DefenseReport {
                config: ctx.stamp.config_hash.clone(),
                seed: ctx.stamp.seed,
                bucket: bucket.clone(),
                depth: gnn_cfg.depth,
                seeds: cfg.defense.seeds,
                runs: cfg.defense.runs.iter().map(RunSpec::slug).collect(),
                selected: DefenseReport::select(&results, cfg.defense.clean_tolerance),
                rates: results,
            };
            error::write(&root.join("comparison.txt"), report.to_text(&ctx.stamp))?;
            error::write(&root.join("comparison.csv"), report.to_csv(&ctx.stamp))?;
            error::write(&root.join("summary.json"), to_json(&report))?;
            out.push(report);
        }
    }
    Ok(out)
}

/// Every outcome log below `out/outcomes`, in path order, with its cell.
pub fn read_logs(out: &Path) -> Result<Vec<(String, PathBuf, RunLog)>> {
    let root = Layout::new(out).outcomes();
    if !root.is_dir() {
        return Err(HarnessError::Missing(root));
    }
    let mut found = Vec::new();
    for cell in sorted_entries(&root)? {
        if !cell.is_dir() {
            continue;
        }
        let name = cell.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_string();
        for file in sorted_entries(&cell)? {
            if file.extension().is_some_and(|e| e == "jsonl") {
                let log = RunLog::read(&file)?;
                found.push((name.clone(), file, log));
            }
        }
    }
    Ok(found)
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut v = std::fs::read_dir(dir)
        .map_err(|e| HarnessError::io(dir, e))?
        .map(|e| e.map(|e| e.path()).map_err(|e| HarnessError::io(dir, e)))
        .collect::<Result<Vec<_>>>()?;
    v.sort();
    Ok(v)
}

/// Renders the tables and diff exports from the outcome logs alone.
pub fn report(out: &Path) -> Result<ReportTable> {
    render_report(out)
}

fn render_report(out: &Path) -> Result<ReportTable> {
    let layout = Layout::new(out);
    if !layout.config().is_file() {
        return Err(HarnessError::Missing(layout.config()));
    }
    let cfg = ExperimentConfig::load(&layout.config())?;
    let stamp = Stamp { config_hash: cfg.hash(), seed: cfg.seed };
    let logs = read_logs(out)?;
    let mut data: BTreeMap<String, Dataset> = BTreeMap::new();
    let diffs = layout.report().join("diffs");
    if diffs.exists() {
        std::fs::remove_dir_all(&diffs).map_err(|e| HarnessError::io(&diffs, e))?;
    }
    for (cell, path, log) in &logs {
        if !data.contains_key(&log.info.bucket) {
            data.insert(log.info.bucket.clone(), formats::read_dataset(&layout.data(&log.info.bucket))?);
        }
        let ds = &data[&log.info.bucket];
        let setup = AttackSetup { indicator: cfg.indicator, budget: log.info.budget, threat: log.threat(), seed: 0 };
        check_log(log, ds, &setup).map_err(|e| match e {
            HarnessError::Core(c) => HarnessError::format(path, c.to_string()),
            e => e,
        })?;
        let slug = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
        for o in log.outcomes.iter().filter(|o| o.attacked && o.success && !o.modifications.is_empty()) {
            let g = ds.graph_of(&ds.instances[o.instance]);
            let region = match (cfg.indicator, o.target) {
                (EquivalencyIndicator::SmallMod { b, .. }, Some(c)) => Some(g.b_hop_neighborhood(c, b)?),
                _ => None,
            };
            let edges = report::diff_edges(g, o, region.as_deref());
            let file = diffs.join(cell).join(slug).join(format!("{:05}.csv", o.instance));
            error::write(&file, report::diff_csv(&stamp, o, &edges, ds.label_base))?;
        }
    }
    let logs: Vec<RunLog> = logs.into_iter().map(|(_, _, l)| l).collect();
    let table = ReportTable::from_logs(&logs)?;
    error::write(&layout.report().join("attack.csv"), table.to_csv(&stamp))?;
    error::write(&layout.report().join("attack.txt"), table.to_text(&stamp))?;
    Ok(table)
}
