//! Edge-list ingestion, subsampling, and the on-disk graph, theta and
//! manifest formats.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::engine::Theta;
use crate::error::{DmcError, Result};
use crate::graph::{Graph, NodeId};

/// Bidirectional map between external node labels and `NodeId`s.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LabelMap {
    labels: Vec<String>,
    ids: FxHashMap<String, NodeId>,
}

impl LabelMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Labels `0..n` for node ids `0..n`.
    pub fn identity(n: usize) -> Self {
        let mut m = Self::new();
        for i in 0..n {
            m.intern(&i.to_string());
        }
        m
    }

    /// Returns the id for `label`, assigning the next free id if unseen.
    pub fn intern(&mut self, label: &str) -> NodeId {
        if let Some(&id) = self.ids.get(label) {
            return id;
        }
        let id = NodeId(self.labels.len() as u32);
        self.labels.push(label.to_owned());
        self.ids.insert(label.to_owned(), id);
        id
    }

    pub fn id(&self, label: &str) -> Option<NodeId> {
        self.ids.get(label).copied()
    }

    pub fn label(&self, id: NodeId) -> Option<&str> {
        self.labels.get(id.index()).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Restriction to `keep`, renumbered so that `keep[i]` becomes id `i`.
    pub fn restrict(&self, keep: &[NodeId]) -> Result<LabelMap> {
        let mut m = LabelMap::new();
        for v in keep {
            let label = self.label(*v).ok_or(DmcError::UnknownNode(*v))?;
            m.intern(label);
        }
        Ok(m)
    }

    fn label_or_err(&self, id: NodeId) -> Result<&str> {
        self.label(id).ok_or(DmcError::UnknownNode(id))
    }
}

/// Description of a delimited edge-list file. Node labels are read from the
/// first two columns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeListSpec {
    pub path: PathBuf,
    /// Field separator; `None` splits on runs of whitespace.
    pub delimiter: Option<char>,
    pub has_header: bool,
    /// Zero-based column holding an edge score.
    pub score_column: Option<usize>,
    /// Rows are kept only when their score is strictly greater than this.
    pub score_threshold: Option<f64>,
    pub drop_self_loops: bool,
    /// Register endpoints of score-filtered rows as (possibly isolated) nodes.
    pub keep_filtered_nodes: bool,
}

impl EdgeListSpec {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        EdgeListSpec {
            path: path.into(),
            delimiter: None,
            has_header: false,
            score_column: None,
            score_threshold: None,
            drop_self_loops: true,
            keep_filtered_nodes: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.score_threshold.is_some() && self.score_column.is_none() {
            return Err(DmcError::InvalidConfig(
                "a score threshold needs a score column".into(),
            ));
        }
        if matches!(self.score_column, Some(0 | 1)) {
            return Err(DmcError::InvalidConfig(
                "the score column cannot be one of the two node columns".into(),
            ));
        }
        Ok(())
    }
}

/// Row accounting for one ingestion. `rows` always equals
/// `edges + self_loops + duplicates + filtered`.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub rows: usize,
    pub self_loops: usize,
    pub duplicates: usize,
    pub filtered: usize,
    pub edges: usize,
    pub nodes: usize,
}

#[derive(Clone, Debug)]
pub struct Ingested {
    pub graph: Graph,
    pub labels: LabelMap,
    pub report: IngestReport,
}

pub fn ingest_edge_list(spec: &EdgeListSpec) -> Result<Ingested> {
    spec.validate()?;
    let file = File::open(&spec.path)?;
    ingest_reader(spec, BufReader::new(file))
}

/// Same as [`ingest_edge_list`] but reads from an arbitrary source;
/// `spec.path` is ignored.
pub fn ingest_reader<R: BufRead>(spec: &EdgeListSpec, reader: R) -> Result<Ingested> {
    spec.validate()?;
    let mut labels = LabelMap::new();
    let mut edges: Vec<(NodeId, NodeId)> = Vec::new();
    let mut report = IngestReport::default();
    let mut header_pending = spec.has_header;
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let trimmed = line.trim_end_matches(['\r', '\n']);
        if trimmed.trim().is_empty() {
            continue;
        }
        if header_pending {
            header_pending = false;
            continue;
        }
        let fields: Vec<&str> = match spec.delimiter {
            None => trimmed.split_whitespace().collect(),
            Some(d) => trimmed.split(d).map(str::trim).collect(),
        };
        let parse_err = |message: String| DmcError::Parse {
            line: line_no,
            message,
        };
        if fields.len() < 2 || fields[0].is_empty() || fields[1].is_empty() {
            return Err(parse_err("expected two node columns".into()));
        }
        report.rows += 1;
        if let Some(col) = spec.score_column {
            let raw = fields
                .get(col)
                .ok_or_else(|| parse_err(format!("missing score column {col}")))?;
            let score: f64 = raw
                .parse()
                .map_err(|_| parse_err(format!("score '{raw}' is not a number")))?;
            if score.is_nan() {
                return Err(parse_err("score is NaN".into()));
            }
            if spec.score_threshold.is_some_and(|t| score <= t) {
                report.filtered += 1;
                if spec.keep_filtered_nodes {
                    labels.intern(fields[0]);
                    labels.intern(fields[1]);
                }
                continue;
            }
        }
        let u = labels.intern(fields[0]);
        let v = labels.intern(fields[1]);
        if u == v {
            if !spec.drop_self_loops {
                return Err(parse_err(format!("self-loop on '{}'", fields[0])));
            }
            report.self_loops += 1;
            continue;
        }
        edges.push((u, v));
    }
    if report.rows == 0 {
        return Err(DmcError::Data("edge list contains no edge rows".into()));
    }
    let mut graph = Graph::with_nodes(labels.len());
    for (u, v) in edges {
        if graph.add_edge(u, v)? {
            report.edges += 1;
        } else {
            report.duplicates += 1;
        }
    }
    report.nodes = graph.node_count();
    Ok(Ingested {
        graph,
        labels,
        report,
    })
}

/// Induced subgraph on `max(1, round(p * n))` nodes drawn uniformly without
/// replacement. The sampled nodes keep their relative order and are
/// returned alongside the subgraph.
pub fn sample_induced_subgraph(g: &Graph, p: f64, seed: u64) -> Result<(Graph, Vec<NodeId>)> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(DmcError::InvalidConfig(format!(
            "sample fraction {p} is outside (0, 1]"
        )));
    }
    let live: Vec<NodeId> = g.nodes().collect();
    if live.is_empty() {
        return Err(DmcError::EmptyGraph);
    }
    let k = ((p * live.len() as f64).round() as usize).clamp(1, live.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = sample(&mut rng, live.len(), k).into_vec();
    picked.sort_unstable();
    let keep: Vec<NodeId> = picked.into_iter().map(|i| live[i]).collect();
    Ok((g.induced_subgraph(&keep)?, keep))
}

fn check_label(label: &str) -> Result<()> {
    if label.is_empty() || label.starts_with('#') || label.chars().any(char::is_whitespace) {
        return Err(DmcError::Data(format!(
            "label '{label}' cannot be written (empty, starts with '#', or contains whitespace)"
        )));
    }
    Ok(())
}

/// Writes the graph format: a `#nodes` line listing every node label in id
/// order, then one `u v` line per edge with `u < v` by id, edges sorted.
pub fn write_graph<W: Write>(mut w: W, g: &Graph, labels: &LabelMap) -> Result<()> {
    let nodes: Vec<NodeId> = g.nodes().collect();
    let mut header = String::from("#nodes");
    for v in &nodes {
        let l = labels.label_or_err(*v)?;
        check_label(l)?;
        header.push(' ');
        header.push_str(l);
    }
    writeln!(w, "{header}")?;
    for (u, v) in g.edges() {
        writeln!(w, "{} {}", labels.label_or_err(u)?, labels.label_or_err(v)?)?;
    }
    w.flush()?;
    Ok(())
}

/// Parses the graph format. `#nodes` lines declare nodes in order; other
/// lines starting with `#` are comments. Labels first seen in edge lines are
/// appended after the declared ones.
pub fn read_graph<R: Read>(r: R) -> Result<(Graph, LabelMap)> {
    let mut labels = LabelMap::new();
    let mut edges = Vec::new();
    for (i, line) in BufReader::new(r).lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if let Some(rest) = t.strip_prefix("#nodes") {
            if !rest.is_empty() && !rest.starts_with(char::is_whitespace) {
                continue;
            }
            for l in rest.split_whitespace() {
                labels.intern(l);
            }
            continue;
        }
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = t.split_whitespace().collect();
        if f.len() != 2 {
            return Err(DmcError::Parse {
                line: i + 1,
                message: format!("expected 'u v', found {} fields", f.len()),
            });
        }
        if f[0] == f[1] {
            return Err(DmcError::Parse {
                line: i + 1,
                message: format!("self-loop on '{}'", f[0]),
            });
        }
        edges.push((labels.intern(f[0]), labels.intern(f[1])));
    }
    let mut g = Graph::with_nodes(labels.len());
    for (u, v) in edges {
        g.add_edge(u, v)?;
    }
    Ok((g, labels))
}

/// Writes a history as two lines: arrival order, then the anchor of each
/// arrival after the first. The second line is empty for a single node.
pub fn write_theta<W: Write>(mut w: W, theta: &Theta, labels: &LabelMap) -> Result<()> {
    let join = |ids: &[NodeId]| -> Result<String> {
        let parts = ids
            .iter()
            .map(|v| labels.label_or_err(*v))
            .collect::<Result<Vec<_>>>()?;
        Ok(parts.join(" "))
    };
    writeln!(w, "{}", join(&theta.arrival_order)?)?;
    writeln!(w, "{}", join(&theta.anchors)?)?;
    w.flush()?;
    Ok(())
}

pub fn read_theta<R: Read>(r: R, labels: &LabelMap) -> Result<Theta> {
    let mut lines = BufReader::new(r).lines();
    let mut next = |line: usize| -> Result<Vec<NodeId>> {
        let text = lines.next().transpose()?.ok_or_else(|| DmcError::Parse {
            line,
            message: "missing line".into(),
        })?;
        text.split_whitespace()
            .map(|l| {
                labels.id(l).ok_or_else(|| DmcError::Parse {
                    line,
                    message: format!("unknown node label '{l}'"),
                })
            })
            .collect()
    };
    let arrival_order = next(1)?;
    let anchors = next(2)?;
    if arrival_order.is_empty() {
        return Err(DmcError::Parse {
            line: 1,
            message: "empty arrival order".into(),
        });
    }
    if anchors.len() + 1 != arrival_order.len() {
        return Err(DmcError::Parse {
            line: 2,
            message: format!(
                "expected {} anchors, found {}",
                arrival_order.len() - 1,
                anchors.len()
            ),
        });
    }
    Ok(Theta {
        arrival_order,
        anchors,
    })
}

pub fn save_graph(path: &Path, g: &Graph, labels: &LabelMap) -> Result<()> {
    write_graph(BufWriter::new(File::create(path)?), g, labels)
}

pub fn load_graph(path: &Path) -> Result<(Graph, LabelMap)> {
    read_graph(File::open(path)?)
}

pub fn save_theta(path: &Path, theta: &Theta, labels: &LabelMap) -> Result<()> {
    write_theta(BufWriter::new(File::create(path)?), theta, labels)
}

pub fn load_theta(path: &Path, labels: &LabelMap) -> Result<Theta> {
    read_theta(File::open(path)?, labels)
}

/// Pretty-printed JSON followed by a newline.
pub fn save_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value).map_err(std::io::Error::from)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn save_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> DmcError {
    DmcError::Data(e.to_string())
}

/// Everything needed to rerun a command and get identical outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub seed_generated: bool,
    pub threads: usize,
    pub config: serde_json::Value,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
}
