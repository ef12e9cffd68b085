//! TU benchmark dataset format.
//!
//! A dataset `DS` lives in `dir/DS/` as comma-separated text files:
//! `DS_A.txt` (one `node, node` line per directed edge, global 1-based node
//! ids), `DS_graph_indicator.txt` (graph id of node `i` on line `i`) and
//! `DS_graph_labels.txt` (class of graph `g` on line `g`).

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::Graph;

const OPTIONAL_FILES: [&str; 5] = [
    "node_labels",
    "node_attributes",
    "edge_labels",
    "edge_attributes",
    "graph_attributes",
];

/// Labelled graphs with ids `1..=N` in file order.
#[derive(Clone, Debug)]
pub struct GraphDataset {
    pub name: String,
    pub graphs: Vec<Graph>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DatasetStats {
    pub graphs: usize,
    pub classes: usize,
    /// `(label, share)` pairs sorted by label.
    pub class_proportions: Vec<(i64, f64)>,
    /// Share of the dominant class.
    pub bias: f64,
    pub min_nodes: usize,
    pub max_nodes: usize,
    pub avg_nodes: f64,
    pub avg_edges: f64,
}

impl GraphDataset {
    /// Wraps graphs, assigning ids `1..=N`. Every graph must carry a label.
    pub fn new(name: impl Into<String>, graphs: Vec<Graph>) -> Result<Self> {
        let graphs = graphs
            .into_iter()
            .enumerate()
            .map(|(i, g)| match g.label() {
                Some(_) => Ok(g.with_id(i + 1)),
                None => Err(Error::validation(format!("graph {} has no label", i + 1))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(GraphDataset {
            name: name.into(),
            graphs,
        })
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    pub fn labels(&self) -> Vec<i64> {
        self.graphs.iter().map(|g| g.label().unwrap_or(0)).collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.graphs.iter().map(Graph::n).collect()
    }

    /// Distinct labels, ascending.
    pub fn class_set(&self) -> Vec<i64> {
        let mut c = self.labels();
        c.sort_unstable();
        c.dedup();
        c
    }

    pub fn stats(&self) -> DatasetStats {
        let n = self.graphs.len();
        let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
        for l in self.labels() {
            *counts.entry(l).or_insert(0) += 1;
        }
        let denom = n.max(1) as f64;
        let class_proportions: Vec<(i64, f64)> = counts
            .iter()
            .map(|(&l, &c)| (l, c as f64 / denom))
            .collect();
        let bias = class_proportions.iter().map(|p| p.1).fold(0.0, f64::max);
        let sizes = self.sizes();
        DatasetStats {
            graphs: n,
            classes: counts.len(),
            class_proportions,
            bias,
            min_nodes: sizes.iter().copied().min().unwrap_or(0),
            max_nodes: sizes.iter().copied().max().unwrap_or(0),
            avg_nodes: sizes.iter().sum::<usize>() as f64 / denom,
            avg_edges: self.graphs.iter().map(Graph::edge_count).sum::<usize>() as f64 / denom,
        }
    }
}

fn file_path(dir: &Path, name: &str, suffix: &str) -> PathBuf {
    dir.join(name).join(format!("{name}_{suffix}.txt"))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Non-blank lines with their 1-based line numbers. Blank lines are only
/// accepted at the end of the file.
fn content_lines<'a>(path: &Path, text: &'a str) -> Result<Vec<(usize, &'a str)>> {
    let mut out = Vec::new();
    let mut blank_at = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            blank_at.get_or_insert(i + 1);
            continue;
        }
        if let Some(b) = blank_at {
            return Err(format_error(path, b, "blank line before end of file"));
        }
        out.push((i + 1, line));
    }
    Ok(out)
}

fn format_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn parse_int<T: std::str::FromStr>(path: &Path, line: usize, token: &str) -> Result<T> {
    token
        .trim()
        .parse()
        .map_err(|_| format_error(path, line, format!("expected an integer, found {token:?}")))
}

/// Loads `dir/name/name_*.txt`.
///
/// Edges are undirected with weight 1; `(i, j)` and `(j, i)` declare the same
/// edge. Self-loops are dropped with a warning. Node and edge attribute
/// files are ignored.
pub fn load_tu_dataset(dir: &Path, name: &str) -> Result<GraphDataset> {
    let indicator_path = file_path(dir, name, "graph_indicator");
    let labels_path = file_path(dir, name, "graph_labels");
    let edges_path = file_path(dir, name, "A");

    let indicator_text = read(&indicator_path)?;
    let labels_text = read(&labels_path)?;
    let edges_text = read(&edges_path)?;

    for suffix in OPTIONAL_FILES {
        let p = file_path(dir, name, suffix);
        if p.exists() {
            log::info!("ignoring {}", p.display());
        }
    }

    // Node -> (graph index, local index).
    let mut node_graph: Vec<(usize, usize)> = Vec::new();
    let mut graph_sizes: Vec<usize> = Vec::new();
    for (line, tok) in content_lines(&indicator_path, &indicator_text)? {
        let gid: usize = parse_int(&indicator_path, line, tok)?;
        if gid == 0 {
            return Err(format_error(&indicator_path, line, "graph ids start at 1"));
        }
        if gid > graph_sizes.len() {
            graph_sizes.resize(gid, 0);
        }
        node_graph.push((gid - 1, graph_sizes[gid - 1]));
        graph_sizes[gid - 1] += 1;
    }
    if let Some(g) = graph_sizes.iter().position(|&s| s == 0) {
        return Err(format_error(
            &indicator_path,
            0,
            format!("graph {} has no nodes", g + 1),
        ));
    }

    let label_lines = content_lines(&labels_path, &labels_text)?;
    if label_lines.len() != graph_sizes.len() {
        return Err(format_error(
            &labels_path,
            label_lines.len(),
            format!(
                "{} labels for {} graphs in the indicator file",
                label_lines.len(),
                graph_sizes.len()
            ),
        ));
    }
    let labels = label_lines
        .iter()
        .map(|&(line, tok)| parse_int::<i64>(&labels_path, line, tok))
        .collect::<Result<Vec<_>>>()?;

    let mut edges: Vec<Vec<(usize, usize, f64)>> = vec![Vec::new(); graph_sizes.len()];
    let mut seen: HashSet<(usize, usize)> = HashSet::new();
    let mut self_loops = 0usize;
    for (line, text) in content_lines(&edges_path, &edges_text)? {
        let mut parts = text.split(',');
        let (a, b) = match (parts.next(), parts.next(), parts.next()) {
            (Some(a), Some(b), None) => (a, b),
            _ => {
                return Err(format_error(
                    &edges_path,
                    line,
                    format!("expected `node, node`, found {text:?}"),
                ))
            }
        };
        let a: usize = parse_int(&edges_path, line, a)?;
        let b: usize = parse_int(&edges_path, line, b)?;
        for v in [a, b] {
            if v == 0 || v > node_graph.len() {
                return Err(format_error(
                    &edges_path,
                    line,
                    format!("node {v} not in the indicator file ({} nodes)", node_graph.len()),
                ));
            }
        }
        let (ga, la) = node_graph[a - 1];
        let (gb, lb) = node_graph[b - 1];
        if ga != gb {
            return Err(format_error(
                &edges_path,
                line,
                format!("edge ({a},{b}) joins graph {} and graph {}", ga + 1, gb + 1),
            ));
        }
        if a == b {
            self_loops += 1;
            continue;
        }
        if seen.insert((a.min(b), a.max(b))) {
            edges[ga].push((la, lb, 1.0));
        }
    }
    if self_loops > 0 {
        log::warn!("{name}: dropped {self_loops} self-loop entries");
    }

    let graphs = graph_sizes
        .iter()
        .zip(edges)
        .zip(labels)
        .map(|((&n, e), label)| Graph::new(n, &e).map(|g| g.with_label(label)))
        .collect::<Result<Vec<_>>>()?;
    GraphDataset::new(name, graphs)
}

/// Writes `ds` under `dir/<ds.name>/` in TU format, listing each edge in
/// both directions. Edge weights are not stored.
pub fn save_tu_dataset(ds: &GraphDataset, dir: &Path) -> Result<()> {
    let base = dir.join(&ds.name);
    fs::create_dir_all(&base).map_err(|source| Error::Io {
        path: base.clone(),
        source,
    })?;
    let mut a = String::new();
    let mut indicator = String::new();
    let mut labels = String::new();
    let mut offset = 0;
    for (gi, g) in ds.graphs.iter().enumerate() {
        for _ in 0..g.n() {
            writeln!(indicator, "{}", gi + 1).unwrap();
        }
        for &(i, j, _) in g.edges() {
            writeln!(a, "{}, {}", offset + i + 1, offset + j + 1).unwrap();
            writeln!(a, "{}, {}", offset + j + 1, offset + i + 1).unwrap();
        }
        writeln!(labels, "{}", g.label().unwrap_or(0)).unwrap();
        offset += g.n();
    }
    for (suffix, text) in [("A", a), ("graph_indicator", indicator), ("graph_labels", labels)] {
        let p = file_path(dir, &ds.name, suffix);
        fs::write(&p, text).map_err(|source| Error::Io { path: p, source })?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_fixture(dir: &Path, name: &str, a: &str, ind: &str, labels: &str) {
        let base = dir.join(name);
        fs::create_dir_all(&base).unwrap();
        fs::write(base.join(format!("{name}_A.txt")), a).unwrap();
        fs::write(base.join(format!("{name}_graph_indicator.txt")), ind).unwrap();
        fs::write(base.join(format!("{name}_graph_labels.txt")), labels).unwrap();
    }

    #[test]
    fn triangle_and_edge() {
        let tmp = tempfile::tempdir().unwrap();
        write_fixture(
            tmp.path(),
            "FIX",
            "1, 2\n2, 1\n2,3\n3 , 1\n1,3\n4, 5\n\n",
            "1\n1\n1\n2\n2\n",
            "1\n-1\n",
        );
        let ds = load_tu_dataset(tmp.path(), "FIX").unwrap();
        assert_eq!(ds.sizes(), vec![3, 2]);
        let edges: Vec<usize> = ds.graphs.iter().map(Graph::edge_count).collect();
        assert_eq!(edges, vec![3, 1]);
        assert_eq!(ds.labels(), vec![1, -1]);
        assert_eq!(ds.graphs[1].id(), Some(2));
        assert_eq!(ds.graphs[1].edges(), &[(0, 1, 1.0)]);
    }

    #[test]
    fn cross_graph_edge() {
        let tmp = tempfile::tempdir().unwrap();
        write_fixture(tmp.path(), "X", "1, 2\n2, 3\n", "1\n1\n2\n", "0\n1\n");
        let err = load_tu_dataset(tmp.path(), "X").unwrap_err();
        assert!(matches!(err, Error::Format { line: 2, .. }), "{err}");
    }

    #[test]
    fn non_integer_token() {
        let tmp = tempfile::tempdir().unwrap();
        write_fixture(tmp.path(), "X", "1, b\n", "1\n1\n", "0\n");
        assert!(matches!(
            load_tu_dataset(tmp.path(), "X").unwrap_err(),
            Error::Format { .. }
        ));
    }

    #[test]
    fn node_count_mismatch() {
        let tmp = tempfile::tempdir().unwrap();
        write_fixture(tmp.path(), "X", "1, 4\n", "1\n1\n1\n", "0\n");
        assert!(matches!(
            load_tu_dataset(tmp.path(), "X").unwrap_err(),
            Error::Format { .. }
        ));
        write_fixture(tmp.path(), "Y", "1, 2\n", "1\n1\n", "0\n1\n");
        assert!(matches!(
            load_tu_dataset(tmp.path(), "Y").unwrap_err(),
            Error::Format { .. }
        ));
    }

    #[test]
    fn missing_file() {
        let tmp = tempfile::tempdir().unwrap();
        match load_tu_dataset(tmp.path(), "NOPE").unwrap_err() {
            Error::Io { path, .. } => assert!(path.to_string_lossy().contains("NOPE")),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn blank_line_inside_file() {
        let tmp = tempfile::tempdir().unwrap();
        write_fixture(tmp.path(), "X", "1, 2\n", "1\n\n1\n", "0\n");
        assert!(matches!(
            load_tu_dataset(tmp.path(), "X").unwrap_err(),
            Error::Format { line: 2, .. }
        ));
    }

    #[test]
    fn single_node_graph_and_self_loop() {
        let tmp = tempfile::tempdir().unwrap();
        write_fixture(tmp.path(), "X", "1, 1\n2, 3\n", "1\n2\n2\n", "0\n1\n");
        let ds = load_tu_dataset(tmp.path(), "X").unwrap();
        assert_eq!(ds.sizes(), vec![1, 2]);
        assert_eq!(ds.graphs[0].edge_count(), 0);
    }

    #[test]
    fn stats_of_fixture() {
        let graphs = vec![
            Graph::complete(3).with_label(0),
            Graph::path(2).with_label(0),
            Graph::empty(4).with_label(1),
        ];
        let s = GraphDataset::new("S", graphs).unwrap().stats();
        assert_eq!(s.graphs, 3);
        assert_eq!(s.classes, 2);
        assert!((s.bias - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!((s.min_nodes, s.max_nodes), (2, 4));
        assert!((s.avg_nodes - 3.0).abs() < 1e-12);
        assert!((s.avg_edges - 4.0 / 3.0).abs() < 1e-12);
    }
}
