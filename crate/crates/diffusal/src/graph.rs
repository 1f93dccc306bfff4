//! Undirected graphs and the on-disk dataset layout.
//!
//! A dataset directory holds four files:
//! - `graph.edges`: one `u v` pair per line, arbitrary non-negative ids
//! - `features.csv`: one row per node (dense comma-separated, or sparse
//!   `idx:value` pairs separated by spaces when meta says so)
//! - `labels.csv`: one integer class per line
//! - `meta.json`: `{"name", "num_classes", "features": "dense"|"sparse"}`
//!
//! Node ids are re-indexed to `0..n` by ascending original id; `n` is the
//! number of distinct ids appearing in `graph.edges`.

use std::collections::HashMap;
use std::io::{BufRead, BufReader};
use std::path::Path;

use ndarray::{Array2, Axis};
use serde::Deserialize;

use crate::error::{Error, Result};

/// Dense node-feature matrix, one row per node.
pub type FeatureMatrix = Array2<f64>;

/// Node labels plus the number of classes they draw from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelVector {
    pub labels: Vec<usize>,
    pub num_classes: usize,
}

impl LabelVector {
    pub fn new(labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        if num_classes == 0 {
            return Err(Error::InvalidInput("num_classes must be positive".into()));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(Error::InvalidInput(format!(
                "label {bad} out of range for {num_classes} classes"
            )));
        }
        Ok(LabelVector {
            labels,
            num_classes,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Per-class counts over `nodes`.
    pub fn class_counts(&self, nodes: impl IntoIterator<Item = usize>) -> Vec<usize> {
        let mut counts = vec![0usize; self.num_classes];
        for u in nodes {
            counts[self.labels[u]] += 1;
        }
        counts
    }
}

/// Undirected simple graph in CSR form. No self-loops, no parallel edges;
/// adjacency lists are sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    row_ptr: Vec<usize>,
    adj: Vec<usize>,
    num_edges: usize,
}

/// What was discarded while normalizing raw edge input.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EdgeCleanup {
    pub self_loops: usize,
    pub duplicates: usize,
}

impl Graph {
    /// Builds from raw pairs: symmetrizes, drops self-loops and duplicate
    /// edges, and reports how many of each it discarded.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<(Self, EdgeCleanup)> {
        let mut cleanup = EdgeCleanup::default();
        let mut lists: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidInput(format!(
                    "edge ({u}, {v}) references a node outside 0..{n}"
                )));
            }
            if u == v {
                cleanup.self_loops += 1;
                continue;
            }
            lists[u].push(v);
            lists[v].push(u);
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0usize);
        let mut adj = Vec::new();
        for list in &mut lists {
            list.sort_unstable();
            let before = list.len();
            list.dedup();
            cleanup.duplicates += before - list.len();
            adj.extend_from_slice(list);
            row_ptr.push(adj.len());
        }
        // Each duplicate undirected edge was counted once per endpoint.
        cleanup.duplicates /= 2;
        let num_edges = adj.len() / 2;
        Ok((
            Graph {
                row_ptr,
                adj,
                num_edges,
            },
            cleanup,
        ))
    }

    pub fn num_nodes(&self) -> usize {
        self.row_ptr.len() - 1
    }

    /// Undirected edge count.
    pub fn num_edges(&self) -> usize {
        self.num_edges
    }

    pub fn degree(&self, u: usize) -> usize {
        self.row_ptr[u + 1] - self.row_ptr[u]
    }

    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.adj[self.row_ptr[u]..self.row_ptr[u + 1]]
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.num_nodes()).map(|u| self.degree(u)).collect()
    }

    /// Connected components as sorted node lists, ordered by smallest member.
    pub fn connected_components(&self) -> Vec<Vec<usize>> {
        let n = self.num_nodes();
        let mut seen = vec![false; n];
        let mut components = Vec::new();
        let mut queue = std::collections::VecDeque::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            queue.push_back(start);
            let mut comp = Vec::new();
            while let Some(u) = queue.pop_front() {
                comp.push(u);
                for &v in self.neighbors(u) {
                    if !seen[v] {
                        seen[v] = true;
                        queue.push_back(v);
                    }
                }
            }
            comp.sort_unstable();
            components.push(comp);
        }
        components
    }
}

#[derive(Debug, Deserialize)]
struct Meta {
    name: String,
    num_classes: usize,
    features: FeatureLayout,
}

#[derive(Debug, Deserialize, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
enum FeatureLayout {
    Dense,
    Sparse,
}

/// Notes produced while loading; nothing here is fatal.
#[derive(Debug, Clone, Default)]
pub struct LoadReport {
    pub self_loops_dropped: usize,
    pub duplicate_edges_dropped: usize,
    pub zero_feature_rows: Vec<usize>,
}

impl LoadReport {
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.self_loops_dropped > 0 {
            out.push(format!("dropped {} self-loop(s)", self.self_loops_dropped));
        }
        if self.duplicate_edges_dropped > 0 {
            out.push(format!(
                "dropped {} duplicate edge(s)",
                self.duplicate_edges_dropped
            ));
        }
        if !self.zero_feature_rows.is_empty() {
            out.push(format!(
                "{} node(s) have all-zero features",
                self.zero_feature_rows.len()
            ));
        }
        out
    }
}

/// A loaded dataset. `orig_ids[i]` is the id node `i` had in the input files.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    pub graph: Graph,
    pub features: FeatureMatrix,
    pub labels: LabelVector,
    pub orig_ids: Vec<u64>,
    pub report: LoadReport,
}

impl Dataset {
    pub fn num_nodes(&self) -> usize {
        self.graph.num_nodes()
    }

    pub fn num_classes(&self) -> usize {
        self.labels.num_classes
    }

    pub fn feature_dim(&self) -> usize {
        self.features.ncols()
    }
}

fn open_lines(path: &Path) -> Result<Vec<String>> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    BufReader::new(file)
        .lines()
        .collect::<std::io::Result<Vec<_>>>()
        .map_err(|e| Error::io(path, e))
}

fn parse_edges(path: &Path) -> Result<Vec<(u64, u64)>> {
    let mut edges = Vec::new();
    for (idx, line) in open_lines(path)?.iter().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let (u, v) = match (it.next(), it.next(), it.next()) {
            (Some(u), Some(v), None) => (u, v),
            _ => {
                return Err(Error::parse(
                    path,
                    idx + 1,
                    "expected exactly two node ids",
                ))
            }
        };
        let parse_id = |s: &str| -> Result<u64> {
            s.parse()
                .map_err(|_| Error::parse(path, idx + 1, format!("bad node id {s:?}")))
        };
        edges.push((parse_id(u)?, parse_id(v)?));
    }
    Ok(edges)
}

fn parse_dense_features(path: &Path, n: usize) -> Result<FeatureMatrix> {
    let lines = open_lines(path)?;
    let rows: Vec<&String> = lines.iter().filter(|l| !l.trim().is_empty()).collect();
    if rows.len() != n {
        return Err(Error::InvalidInput(format!(
            "{}: expected {n} feature rows, found {}",
            path.display(),
            rows.len()
        )));
    }
    let dim = rows[0].split(',').count();
    let mut data = Vec::with_capacity(n * dim);
    for (idx, row) in rows.iter().enumerate() {
        let values: Vec<&str> = row.split(',').collect();
        if values.len() != dim {
            return Err(Error::parse(
                path,
                idx + 1,
                format!("expected {dim} values, found {}", values.len()),
            ));
        }
        for v in values {
            let x: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::parse(path, idx + 1, format!("bad feature value {v:?}")))?;
            if x < 0.0 {
                return Err(Error::parse(path, idx + 1, format!("negative feature {x}")));
            }
            data.push(x);
        }
    }
    Array2::from_shape_vec((n, dim), data)
        .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}

fn parse_sparse_features(path: &Path, n: usize) -> Result<FeatureMatrix> {
    let lines = open_lines(path)?;
    if lines.len() != n {
        return Err(Error::InvalidInput(format!(
            "{}: expected {n} feature rows, found {}",
            path.display(),
            lines.len()
        )));
    }
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(n);
    let mut dim = 0usize;
    for (idx, line) in lines.iter().enumerate() {
        let mut row = Vec::new();
        for tok in line.split_whitespace() {
            let (i, v) = tok.split_once(':').ok_or_else(|| {
                Error::parse(path, idx + 1, format!("expected idx:value, found {tok:?}"))
            })?;
            let i: usize = i
                .parse()
                .map_err(|_| Error::parse(path, idx + 1, format!("bad feature index {i:?}")))?;
            let v: f64 = v
                .parse()
                .map_err(|_| Error::parse(path, idx + 1, format!("bad feature value {v:?}")))?;
            if v < 0.0 {
                return Err(Error::parse(path, idx + 1, format!("negative feature {v}")));
            }
            dim = dim.max(i + 1);
            row.push((i, v));
        }
        rows.push(row);
    }
    let mut out = Array2::<f64>::zeros((n, dim.max(1)));
    for (r, row) in rows.iter().enumerate() {
        for &(c, v) in row {
            out[[r, c]] = v;
        }
    }
    Ok(out)
}

fn parse_labels(path: &Path, n: usize, num_classes: usize) -> Result<LabelVector> {
    let lines = open_lines(path)?;
    let rows: Vec<&String> = lines.iter().filter(|l| !l.trim().is_empty()).collect();
    if rows.len() != n {
        return Err(Error::InvalidInput(format!(
            "{}: expected {n} labels, found {}",
            path.display(),
            rows.len()
        )));
    }
    let mut labels = Vec::with_capacity(n);
    for (idx, row) in rows.iter().enumerate() {
        let label: usize = row
            .trim()
            .parse()
            .map_err(|_| Error::parse(path, idx + 1, format!("bad label {row:?}")))?;
        if label >= num_classes {
            return Err(Error::parse(
                path,
                idx + 1,
                format!("label {label} out of range for {num_classes} classes"),
            ));
        }
        labels.push(label);
    }
    LabelVector::new(labels, num_classes)
}

/// Loads a dataset directory. Node count is defined by the distinct ids in
/// `graph.edges`; features and labels must match it row for row.
pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    let meta_path = dir.join("meta.json");
    if !meta_path.exists() {
        return Err(Error::MissingFile(meta_path));
    }
    let meta_text = std::fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
    let meta: Meta = serde_json::from_str(&meta_text)
        .map_err(|e| Error::parse(&meta_path, e.line(), e.to_string()))?;
    if meta.num_classes == 0 {
        return Err(Error::InvalidInput(format!(
            "{}: num_classes must be positive",
            meta_path.display()
        )));
    }

    let raw_edges = parse_edges(&dir.join("graph.edges"))?;
    let mut ids: Vec<u64> = raw_edges.iter().flat_map(|&(u, v)| [u, v]).collect();
    ids.sort_unstable();
    ids.dedup();
    if ids.is_empty() {
        return Err(Error::InvalidInput(format!(
            "{}: graph has no edges",
            dir.join("graph.edges").display()
        )));
    }
    let index: HashMap<u64, usize> = ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
    let n = ids.len();
    let edges: Vec<(usize, usize)> = raw_edges
        .iter()
        .map(|&(u, v)| (index[&u], index[&v]))
        .collect();
    let (graph, cleanup) = Graph::from_edges(n, &edges)?;

    let features = match meta.features {
        FeatureLayout::Dense => parse_dense_features(&dir.join("features.csv"), n)?,
        FeatureLayout::Sparse => parse_sparse_features(&dir.join("features.csv"), n)?,
    };
    let labels = parse_labels(&dir.join("labels.csv"), n, meta.num_classes)?;

    let zero_feature_rows = features
        .axis_iter(Axis(0))
        .enumerate()
        .filter(|(_, row)| row.iter().all(|&x| x == 0.0))
        .map(|(i, _)| i)
        .collect();
    let report = LoadReport {
        self_loops_dropped: cleanup.self_loops,
        duplicate_edges_dropped: cleanup.duplicates,
        zero_feature_rows,
    };
    Ok(Dataset {
        name: meta.name,
        graph,
        features,
        labels,
        orig_ids: ids,
        report,
    })
}

/// Restricts a dataset to its largest connected component (ties broken toward
/// the component containing the smallest node id). Nodes are re-indexed but
/// keep their relative order. Fails if any class disappears entirely.
pub fn largest_connected_component(ds: &Dataset) -> Result<Dataset> {
    let components = ds.graph.connected_components();
    let keep = components
        .iter()
        .max_by(|a, b| a.len().cmp(&b.len()).then(b[0].cmp(&a[0])))
        .ok_or_else(|| Error::InvalidInput("graph has no nodes".into()))?;
    let mut new_id = vec![usize::MAX; ds.num_nodes()];
    for (i, &old) in keep.iter().enumerate() {
        new_id[old] = i;
    }
    let mut edges = Vec::new();
    for &old in keep {
        for &nb in ds.graph.neighbors(old) {
            if old < nb {
                edges.push((new_id[old], new_id[nb]));
            }
        }
    }
    let (graph, _) = Graph::from_edges(keep.len(), &edges)?;
    let features = ds.features.select(Axis(0), keep);
    let labels = LabelVector::new(
        keep.iter().map(|&u| ds.labels.labels[u]).collect(),
        ds.labels.num_classes,
    )?;
    let counts = labels.class_counts(0..labels.len());
    if let Some(missing) = counts.iter().position(|&c| c == 0) {
        return Err(Error::InvalidInput(format!(
            "class {missing} has no nodes in the largest connected component"
        )));
    }
    let report = LoadReport {
        zero_feature_rows: ds
            .report
            .zero_feature_rows
            .iter()
            .filter(|&&u| new_id[u] != usize::MAX)
            .map(|&u| new_id[u])
            .collect(),
        ..ds.report.clone()
    };
    Ok(Dataset {
        name: ds.name.clone(),
        graph,
        features,
        labels,
        orig_ids: keep.iter().map(|&u| ds.orig_ids[u]).collect(),
        report,
    })
}

/// Scales each row to unit L1 norm. All-zero rows pass through unchanged;
/// negative entries are rejected.
pub fn l1_normalize_rows(x: &FeatureMatrix) -> Result<FeatureMatrix> {
    if x.iter().any(|&v| v < 0.0) {
        return Err(Error::InvalidInput(
            "features must be non-negative for L1 normalization".into(),
        ));
    }
    let mut out = x.clone();
    for mut row in out.axis_iter_mut(Axis(0)) {
        let sum: f64 = row.iter().sum();
        if sum > 0.0 {
            row.mapv_inplace(|v| v / sum);
        }
    }
    Ok(out)
}
