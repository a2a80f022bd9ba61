//! Attacked-accuracy tables and per-instance graph diffs.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use graphadv_core::attack::{AttackOutcome, ModKind, ThreatModel};
use graphadv_core::dataset::SplitName;
use graphadv_core::graph::{Edge, Graph, NodeId};

use crate::error::{HarnessError, Result};
use crate::formats::Stamp;
use crate::logs::RunLog;
use crate::pairing::Method;

/// `<split> <threat>`, e.g. `test_I PBA-D`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Setting {
    pub split: String,
    pub threat: ThreatModel,
}

impl Setting {
    fn sort_key(&self) -> (usize, usize) {
        let split = SplitName::ALL.iter().position(|s| s.as_str() == self.split).unwrap_or(SplitName::ALL.len());
        let threat = ThreatModel::ALL.iter().position(|&t| t == self.threat).unwrap_or(ThreatModel::ALL.len());
        (split, threat)
    }

    pub fn label(&self) -> String {
        format!("{} {}", self.split, self.threat.as_str())
    }
}

/// A size bucket and a model depth.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Column {
    pub bucket: String,
    pub depth: usize,
}

impl Column {
    fn sort_key(&self) -> (usize, &str, usize) {
        let digits: String = self.bucket.chars().skip_while(|c| !c.is_ascii_digit()).take_while(char::is_ascii_digit).collect();
        (digits.parse().unwrap_or(usize::MAX), &self.bucket, self.depth)
    }

    pub fn label(&self) -> String {
        format!("{} K={}", self.bucket, self.depth)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cell {
    /// Attacked accuracy in percent.
    pub percent: f64,
    pub instances: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub setting: Setting,
    pub method: Method,
    pub cells: Vec<Option<Cell>>,
}

/// Row order: setting sort key, then setting, then method.
type RowKey = ((usize, usize), Setting, Method);

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ReportTable {
    pub columns: Vec<Column>,
    pub rows: Vec<Row>,
}

impl ReportTable {
    /// One cell per log; two logs for the same cell are an error.
    pub fn from_logs(logs: &[RunLog]) -> Result<Self> {
        let mut columns: Vec<Column> = Vec::new();
        for log in logs {
            let c = Column { bucket: log.info.bucket.clone(), depth: log.info.depth };
            if !columns.contains(&c) {
                columns.push(c);
            }
        }
        columns.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
        let mut rows: BTreeMap<RowKey, Vec<Option<Cell>>> = BTreeMap::new();
        for log in logs {
            let setting = Setting { split: log.info.split.clone(), threat: log.threat() };
            let col = columns.iter().position(|c| c.bucket == log.info.bucket && c.depth == log.info.depth).expect("column collected");
            let cells = rows.entry((setting.sort_key(), setting.clone(), log.info.method)).or_insert_with(|| vec![None; columns.len()]);
            if cells[col].is_some() {
                return Err(HarnessError::Config(format!(
                    "two outcome logs for {} / {} / {}",
                    setting.label(),
                    log.info.method.display_name(),
                    columns[col].label()
                )));
            }
            cells[col] = Some(Cell { percent: 100.0 * log.summary.attacked_accuracy, instances: log.summary.instances });
        }
        let rows = rows.into_iter().map(|((_, setting, method), cells)| Row { setting, method, cells }).collect();
        Ok(ReportTable { columns, rows })
    }

    pub fn get(&self, setting: &Setting, method: Method, column: &Column) -> Option<Cell> {
        let col = self.columns.iter().position(|c| c == column)?;
        self.rows.iter().find(|r| &r.setting == setting && r.method == method)?.cells[col]
    }

    pub fn filled_cells(&self) -> usize {
        self.rows.iter().map(|r| r.cells.iter().flatten().count()).sum()
    }

    fn header(&self) -> Vec<String> {
        let mut h = vec!["setting".to_string(), "method".to_string()];
        for c in &self.columns {
            h.push(format!("{} acc%", c.label()));
            h.push(format!("{} n", c.label()));
        }
        h
    }

    pub fn to_csv(&self, stamp: &Stamp) -> String {
        let mut w = csv::Writer::from_writer(stamp.comment().into_bytes());
        w.write_record(self.header()).expect("in-memory write");
        for r in &self.rows {
            let mut rec = vec![r.setting.label(), r.method.display_name().to_string()];
            for c in &r.cells {
                match c {
                    Some(c) => {
                        rec.push(format!("{:.2}", c.percent));
                        rec.push(c.instances.to_string());
                    }
                    None => rec.extend([String::new(), String::new()]),
                }
            }
            w.write_record(rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 records")
    }

    /// Column-aligned text; cells read `93.20 (300)`.
    pub fn to_text(&self, stamp: &Stamp) -> String {
        let mut grid = vec![{
            let mut h = vec!["setting".to_string(), "method".to_string()];
            h.extend(self.columns.iter().map(Column::label));
            h
        }];
        for r in &self.rows {
            let mut line = vec![r.setting.label(), r.method.display_name().to_string()];
            line.extend(r.cells.iter().map(|c| c.map_or("-".to_string(), |c| format!("{:.2} ({})", c.percent, c.instances))));
            grid.push(line);
        }
        align(&grid, stamp)
    }
}

/// Left-aligned columns separated by two spaces, preceded by the stamp.
pub fn align(grid: &[Vec<String>], stamp: &Stamp) -> String {
    let cols = grid.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> =
        (0..cols).map(|j| grid.iter().filter_map(|r| r.get(j)).map(|s| s.chars().count()).max().unwrap_or(0)).collect();
    let mut out = stamp.comment();
    for row in grid {
        let mut line = String::new();
        for (j, s) in row.iter().enumerate() {
            if j > 0 {
                line.push_str("  ");
            }
            let _ = write!(line, "{s:<w$}", w = widths[j]);
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum DiffStatus {
    Kept,
    Deleted,
    Added,
}

impl DiffStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            DiffStatus::Kept => "kept",
            DiffStatus::Deleted => "deleted",
            DiffStatus::Added => "added",
        }
    }
}

/// Every original edge marked kept or deleted, plus the added pairs. With
/// `region`, only pairs with both endpoints inside it are listed.
pub fn diff_edges(original: &Graph, outcome: &AttackOutcome, region: Option<&[NodeId]>) -> Vec<(DiffStatus, Edge)> {
    let inside = |e: &Edge| region.is_none_or(|r| r.binary_search(&e.u()).is_ok() && r.binary_search(&e.v()).is_ok());
    let mut out: Vec<(DiffStatus, Edge)> = original.edges().filter(inside).map(|e| (DiffStatus::Kept, e)).collect();
    for m in &outcome.modifications {
        match m.kind {
            ModKind::Delete => {
                if let Some(slot) = out.iter_mut().find(|(_, e)| *e == m.edge) {
                    slot.0 = DiffStatus::Deleted;
                } else {
                    out.push((DiffStatus::Deleted, m.edge));
                }
            }
            ModKind::Add => out.push((DiffStatus::Added, m.edge)),
        }
    }
    out.sort_by_key(|&(s, e)| (s, e));
    out
}

/// CSV rows `status,u,v` under a comment header naming the instance and
/// its predictions before and after.
pub fn diff_csv(stamp: &Stamp, outcome: &AttackOutcome, edges: &[(DiffStatus, Edge)], label_base: usize) -> String {
    let mut head = stamp.comment();
    let target = outcome.target.map_or("-".to_string(), |t| t.to_string());
    let _ = writeln!(
        head,
        "# instance={} target={} label={} before={} after={} label_base={}",
        outcome.instance, target, outcome.label, outcome.original_prediction, outcome.final_prediction, label_base
    );
    let mut w = csv::Writer::from_writer(head.into_bytes());
    w.write_record(["status", "u", "v"]).expect("in-memory write");
    for (s, e) in edges {
        w.write_record([s.as_str().to_string(), e.u().to_string(), e.v().to_string()]).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 records")
}
