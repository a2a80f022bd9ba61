//! Line-oriented text formats for graphs and dataset manifests.
//!
//! Graph file:
//!
//! ```text
//! # optional comment lines
//! n <num_nodes> <node_dim> <edge_dim>
//! <node_dim floats>            one line per node, omitted when node_dim = 0
//! e <u> <v> <edge_dim floats>  one line per edge, canonical u < v
//! ```
//!
//! Manifest: `# key=value` header lines, then one
//! `<graph-path> <target|-> <label> <split|->` line per instance. Paths are
//! relative to the manifest's directory.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use graphadv_core::dataset::{DataInstance, Dataset, SplitName, Splits, Task};
use graphadv_core::graph::{Edge, Graph};

use crate::error::{self, HarnessError, Result};

/// Artifact stamp written as a comment header.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stamp {
    pub config_hash: String,
    pub seed: u64,
}

impl Stamp {
    pub fn comment(&self) -> String {
        format!("# config={} seed={}\n", self.config_hash, self.seed)
    }
}

fn push_floats(out: &mut String, xs: &[f64]) {
    for (i, x) in xs.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        write!(out, "{x:?}").unwrap();
    }
}

pub fn write_graph(g: &Graph, stamp: Option<&Stamp>) -> String {
    let mut out = String::new();
    if let Some(s) = stamp {
        out.push_str(&s.comment());
    }
    writeln!(out, "n {} {} {}", g.num_nodes(), g.node_dim(), g.edge_dim()).unwrap();
    if g.node_dim() > 0 {
        for v in 0..g.num_nodes() {
            push_floats(&mut out, g.node_features(v));
            out.push('\n');
        }
    }
    for e in g.edges() {
        write!(out, "e {} {}", e.u(), e.v()).unwrap();
        if g.edge_dim() > 0 {
            out.push(' ');
            push_floats(&mut out, g.edge_features(&e).unwrap_or(&[]));
        }
        out.push('\n');
    }
    out
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.starts_with('#'))
}

fn parse_num<T: std::str::FromStr>(tok: Option<&str>, what: &str, line: usize) -> std::result::Result<T, String> {
    let tok = tok.ok_or_else(|| format!("line {line}: missing {what}"))?;
    tok.parse().map_err(|_| format!("line {line}: bad {what} `{tok}`"))
}

fn parse_graph_str(text: &str) -> std::result::Result<Graph, String> {
    let mut lines = content_lines(text).filter(|(_, l)| !l.is_empty());
    let (ln, header) = lines.next().ok_or("empty graph file")?;
    let mut tok = header.split_whitespace();
    if tok.next() != Some("n") {
        return Err(format!("line {ln}: expected `n <nodes> <node_dim> <edge_dim>`"));
    }
    let n: usize = parse_num(tok.next(), "node count", ln)?;
    let dn: usize = parse_num(tok.next(), "node feature width", ln)?;
    let de: usize = parse_num(tok.next(), "edge feature width", ln)?;
    let mut features = Vec::with_capacity(n * dn);
    if dn > 0 {
        for _ in 0..n {
            let (ln, l) = lines.next().ok_or("truncated node feature block")?;
            let row: Vec<f64> = l.split_whitespace().map(|t| parse_num(Some(t), "feature", ln)).collect::<std::result::Result<_, _>>()?;
            if row.len() != dn {
                return Err(format!("line {ln}: {} node features, expected {dn}", row.len()));
            }
            features.extend(row);
        }
    }
    let mut pairs = Vec::new();
    let mut rows = BTreeMap::new();
    for (ln, l) in lines {
        let mut tok = l.split_whitespace();
        if tok.next() != Some("e") {
            return Err(format!("line {ln}: expected an edge line"));
        }
        let u: usize = parse_num(tok.next(), "endpoint", ln)?;
        let v: usize = parse_num(tok.next(), "endpoint", ln)?;
        let row: Vec<f64> = tok.map(|t| parse_num(Some(t), "feature", ln)).collect::<std::result::Result<_, _>>()?;
        if row.len() != de {
            return Err(format!("line {ln}: {} edge features, expected {de}", row.len()));
        }
        let e = Edge::new(u, v).map_err(|e| format!("line {ln}: {e}"))?;
        if rows.insert(e, row).is_some() {
            return Err(format!("line {ln}: duplicate edge ({u}, {v})"));
        }
        pairs.push((u, v));
    }
    let mut g = Graph::from_edges(n, pairs).map_err(|e| e.to_string())?;
    if dn > 0 {
        g = g.with_node_features(dn, features).map_err(|e| e.to_string())?;
    }
    if de > 0 {
        g = g.with_edge_features(de, rows).map_err(|e| e.to_string())?;
    }
    Ok(g)
}

pub fn parse_graph(text: &str, path: &Path) -> Result<Graph> {
    parse_graph_str(text).map_err(|m| HarnessError::format(path, m))
}

pub fn read_graph(path: &Path) -> Result<Graph> {
    parse_graph(&error::read_to_string(path)?, path)
}

fn task_name(t: Task) -> &'static str {
    match t {
        Task::InductiveGraph => "inductive-graph",
        Task::TransductiveNode => "transductive-node",
    }
}

fn split_of(splits: &Splits, n: usize) -> Vec<Option<SplitName>> {
    let mut out = vec![None; n];
    for name in SplitName::ALL {
        for &i in splits.get(name) {
            out[i] = Some(name);
        }
    }
    out
}

/// Relative path of graph `i` inside a dataset directory.
pub fn graph_file(i: usize) -> String {
    format!("graphs/g{i:05}.txt")
}

/// Renders every file of a dataset directory: `(relative path, contents)`.
pub fn dataset_files(ds: &Dataset, stamp: &Stamp) -> Vec<(String, String)> {
    let mut files = Vec::with_capacity(ds.graphs.len() + 1);
    let mut manifest = stamp.comment();
    writeln!(manifest, "# task={} classes={} label_base={}", task_name(ds.task), ds.num_classes, ds.label_base).unwrap();
    let splits = split_of(&ds.splits, ds.instances.len());
    for (inst, split) in ds.instances.iter().zip(splits) {
        let target = inst.target.map_or("-".to_string(), |c| c.to_string());
        let split = split.map_or("-", |s| s.as_str());
        writeln!(manifest, "{} {target} {} {split}", graph_file(inst.graph), inst.label).unwrap();
    }
    files.push(("manifest.txt".to_string(), manifest));
    for (i, g) in ds.graphs.iter().enumerate() {
        files.push((graph_file(i), write_graph(g, Some(stamp))));
    }
    files
}

pub fn write_dataset(dir: &Path, ds: &Dataset, stamp: &Stamp) -> Result<()> {
    for (rel, text) in dataset_files(ds, stamp) {
        error::write(&dir.join(rel), text)?;
    }
    Ok(())
}

/// Header `key=value` pairs of a manifest or graph file.
pub fn header_fields(text: &str) -> BTreeMap<String, String> {
    text.lines()
        .take_while(|l| l.trim_start().starts_with('#'))
        .flat_map(|l| l.trim_start_matches('#').split_whitespace())
        .filter_map(|kv| kv.split_once('=').map(|(k, v)| (k.to_string(), v.to_string())))
        .collect()
}

pub fn read_dataset(dir: &Path) -> Result<Dataset> {
    let path = dir.join("manifest.txt");
    let text = error::read_to_string(&path)?;
    let head = header_fields(&text);
    let bad = |m: String| HarnessError::format(&path, m);
    let task = match head.get("task").map(String::as_str) {
        Some("inductive-graph") => Task::InductiveGraph,
        Some("transductive-node") => Task::TransductiveNode,
        other => return Err(bad(format!("unknown task {other:?}"))),
    };
    let field =
        |k: &str| -> Result<usize> { head.get(k).and_then(|v| v.parse().ok()).ok_or_else(|| bad(format!("missing header field `{k}`"))) };
    let num_classes = field("classes")?;
    let label_base = field("label_base")?;
    let mut graphs = Vec::new();
    let mut index: BTreeMap<String, usize> = BTreeMap::new();
    let mut instances = Vec::new();
    let mut splits = Splits::default();
    for (ln, line) in content_lines(&text).filter(|(_, l)| !l.is_empty()) {
        let tok: Vec<&str> = line.split_whitespace().collect();
        if tok.len() != 4 {
            return Err(bad(format!("line {ln}: expected `<graph> <target|-> <label> <split|->`")));
        }
        let graph = match index.get(tok[0]) {
            Some(&i) => i,
            None => {
                graphs.push(read_graph(&dir.join(tok[0]))?);
                index.insert(tok[0].to_string(), graphs.len() - 1);
                graphs.len() - 1
            }
        };
        let target = match tok[1] {
            "-" => None,
            t => Some(parse_num(Some(t), "target node", ln).map_err(bad)?),
        };
        let label = parse_num(Some(tok[2]), "label", ln).map_err(bad)?;
        if tok[3] != "-" {
            let name = SplitName::parse(tok[3]).ok_or_else(|| bad(format!("line {ln}: unknown split `{}`", tok[3])))?;
            splits.get_mut(name).push(instances.len());
        }
        instances.push(DataInstance { graph, target, label });
    }
    let ds = Dataset { task, graphs, instances, splits, num_classes, label_base };
    ds.validate().map_err(|e| bad(e.to_string()))?;
    Ok(ds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use graphadv_core::dataset::{gen_component_dataset, gen_node_dataset, ComponentDatasetConfig, NodeDatasetConfig, SplitSizes};
    use proptest::prelude::*;

    fn stamp() -> Stamp {
        Stamp { config_hash: "abc".into(), seed: 7 }
    }

    #[test]
    fn graph_text_layout() {
        let g = Graph::from_edges(3, [(1, 0), (1, 2)]).unwrap();
        assert_eq!(write_graph(&g, None), "n 3 0 0\ne 0 1\ne 1 2\n");
        let g = g.with_node_features(1, vec![1.0, 0.5, -2.0]).unwrap();
        assert_eq!(write_graph(&g, None), "n 3 1 0\n1.0\n0.5\n-2.0\ne 0 1\ne 1 2\n");
    }

    #[test]
    fn malformed_graphs_are_rejected() {
        let p = Path::new("g.txt");
        for text in ["", "m 2 0 0", "n 2 0 0\ne 0 2", "n 2 0 0\ne 1 1", "n 2 0 0\ne 0 1\ne 1 0", "n 2 1 0\n1.0\n", "n 2 0 1\ne 0 1"] {
            assert!(parse_graph(text, p).is_err(), "{text:?}");
        }
    }

    #[test]
    fn edge_features_round_trip() {
        let g = Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        let rows = [(Edge::new(0, 1).unwrap(), vec![0.25, 1.0]), (Edge::new(1, 2).unwrap(), vec![-1.0, 3.0])].into_iter().collect();
        let g = g.with_edge_features(2, rows).unwrap();
        let back = parse_graph(&write_graph(&g, Some(&stamp())), Path::new("g")).unwrap();
        assert_eq!(write_graph(&back, None), write_graph(&g, None));
        assert_eq!(back.edge_features(&Edge::new(1, 2).unwrap()), Some(&[-1.0, 3.0][..]));
    }

    proptest! {
        #[test]
        fn graphs_round_trip(n in 1usize..12, pairs in proptest::collection::vec((0usize..12, 0usize..12), 0..30), feats in proptest::collection::vec(-1e3f64..1e3, 24)) {
            let pairs: Vec<_> = pairs.into_iter().filter(|&(a, b)| a < n && b < n && a != b).collect();
            let g = Graph::from_edges(n, pairs).unwrap().with_node_features(2, feats[..2 * n].to_vec()).unwrap();
            let text = write_graph(&g, None);
            let back = parse_graph(&text, Path::new("g")).unwrap();
            prop_assert_eq!(write_graph(&back, None), text);
            prop_assert_eq!(back.node_feature_block(), g.node_feature_block());
        }
    }

    #[test]
    fn datasets_round_trip_through_a_directory() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ComponentDatasetConfig { per_class: 4, splits: SplitSizes { train: 6, test_i: 4, test_ii: 2 }, ..Default::default() };
        let ds = gen_component_dataset(&cfg).unwrap();
        write_dataset(dir.path(), &ds, &stamp()).unwrap();
        assert_eq!(read_dataset(dir.path()).unwrap(), ds);
        let node = gen_node_dataset(&NodeDatasetConfig {
            num_nodes: 60,
            splits: SplitSizes { train: 10, test_i: 10, test_ii: 5 },
            ..Default::default()
        })
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_dataset(dir.path(), &node, &stamp()).unwrap();
        let text = std::fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
        assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 60);
        assert_eq!(header_fields(&text)["config"], "abc");
        assert_eq!(read_dataset(dir.path()).unwrap(), node);
    }

    #[test]
    fn manifest_errors_name_the_file() {
        let dir = tempfile::tempdir().unwrap();
        error::write(&dir.path().join("manifest.txt"), "# task=inductive-graph classes=3 label_base=1\nmissing.txt - 0 train\n").unwrap();
        assert!(matches!(read_dataset(dir.path()), Err(HarnessError::Missing(_))));
        error::write(&dir.path().join("manifest.txt"), "# task=inductive-graph classes=3 label_base=1\nx 1\n").unwrap();
        let err = read_dataset(dir.path()).unwrap_err().to_string();
        assert!(err.contains("manifest.txt"), "{err}");
    }
}
