//! Directed graphs, subpopulation maps and aggregated relational data.

use crate::error::{Error, Result};
use crate::rng;

/// Sparse directed graph without self-loops or duplicate edges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DirectedGraph {
    num_nodes: usize,
    edges: Vec<(usize, usize)>,
    offsets: Vec<usize>,
}

impl DirectedGraph {
    pub fn new(num_nodes: usize, mut edges: Vec<(usize, usize)>) -> Result<Self> {
        for &(src, dst) in &edges {
            if src >= num_nodes || dst >= num_nodes {
                return Err(Error::Data(format!(
                    "edge ({src}, {dst}) out of range for {num_nodes} nodes"
                )));
            }
            if src == dst {
                return Err(Error::Data(format!("self-loop at node {src}")));
            }
        }
        edges.sort_unstable();
        if let Some(w) = edges.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Data(format!(
                "duplicate edge ({}, {})",
                w[0].0, w[0].1
            )));
        }
        Ok(Self::from_sorted(num_nodes, edges))
    }

    /// `edges` must already be sorted, unique, loop-free and in range.
    pub(crate) fn from_sorted(num_nodes: usize, edges: Vec<(usize, usize)>) -> Self {
        let mut offsets = vec![0usize; num_nodes + 1];
        for &(src, _) in &edges {
            offsets[src + 1] += 1;
        }
        for i in 0..num_nodes {
            offsets[i + 1] += offsets[i];
        }
        DirectedGraph {
            num_nodes,
            edges,
            offsets,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Edges sorted by `(src, dst)`.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn out_edges(&self, node: usize) -> &[(usize, usize)] {
        &self.edges[self.offsets[node]..self.offsets[node + 1]]
    }

    pub fn out_degree(&self, node: usize) -> usize {
        self.offsets[node + 1] - self.offsets[node]
    }

    pub fn has_edge(&self, src: usize, dst: usize) -> bool {
        src < self.num_nodes
            && self
                .out_edges(src)
                .binary_search_by_key(&dst, |&(_, d)| d)
                .is_ok()
    }

    /// Fraction of ordered non-self pairs that are edges.
    pub fn density(&self) -> f64 {
        let n = self.num_nodes as f64;
        if self.num_nodes < 2 {
            return 0.0;
        }
        self.edges.len() as f64 / (n * (n - 1.0))
    }
}

/// Uniform node sample without replacement and its induced subgraph.
#[derive(Clone, Debug)]
pub struct InducedSubgraph {
    pub graph: DirectedGraph,
    /// `original_ids[new_id]` is the node id in the parent graph, ascending.
    pub original_ids: Vec<usize>,
}

pub fn subsample_nodes(graph: &DirectedGraph, n: usize, seed: u64) -> Result<InducedSubgraph> {
    if n > graph.num_nodes() {
        return Err(Error::InvalidParameter(format!(
            "cannot sample {n} nodes from a graph with {}",
            graph.num_nodes()
        )));
    }
    let mut rng = rng::stream(seed, &[rng::STREAM_SUBSAMPLE]);
    let mut original_ids = rand::seq::index::sample(&mut rng, graph.num_nodes(), n).into_vec();
    original_ids.sort_unstable();
    Ok(induced_subgraph(graph, original_ids))
}

/// Subgraph keeping edges with both endpoints in `nodes` (sorted, unique).
pub fn induced_subgraph(graph: &DirectedGraph, original_ids: Vec<usize>) -> InducedSubgraph {
    let mut new_id = vec![usize::MAX; graph.num_nodes()];
    for (j, &v) in original_ids.iter().enumerate() {
        new_id[v] = j;
    }
    let mut edges = Vec::new();
    for (j, &v) in original_ids.iter().enumerate() {
        for &(_, dst) in graph.out_edges(v) {
            if new_id[dst] != usize::MAX {
                edges.push((j, new_id[dst]));
            }
        }
    }
    edges.sort_unstable();
    InducedSubgraph {
        graph: DirectedGraph::from_sorted(original_ids.len(), edges),
        original_ids,
    }
}

/// Node → subpopulation labels. Nodes may be unassigned.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubpopulationMap {
    num_subpops: usize,
    labels: Vec<Option<usize>>,
}

impl SubpopulationMap {
    pub fn new(num_subpops: usize, labels: Vec<Option<usize>>) -> Result<Self> {
        if let Some((node, k)) = labels
            .iter()
            .enumerate()
            .find_map(|(i, l)| l.filter(|&k| k >= num_subpops).map(|k| (i, k)))
        {
            return Err(Error::Data(format!(
                "node {node} assigned to subpopulation {k} of {num_subpops}"
            )));
        }
        Ok(SubpopulationMap {
            num_subpops,
            labels,
        })
    }

    /// Every node assigned; `num_subpops` is one past the largest label.
    pub fn complete(labels: &[usize]) -> Self {
        let num_subpops = labels.iter().max().map_or(0, |&m| m + 1);
        SubpopulationMap {
            num_subpops,
            labels: labels.iter().map(|&k| Some(k)).collect(),
        }
    }

    pub fn num_subpops(&self) -> usize {
        self.num_subpops
    }

    pub fn num_nodes(&self) -> usize {
        self.labels.len()
    }

    pub fn label(&self, node: usize) -> Option<usize> {
        self.labels.get(node).copied().flatten()
    }

    pub fn labels(&self) -> &[Option<usize>] {
        &self.labels
    }

    pub fn sizes(&self) -> Vec<u64> {
        let mut sizes = vec![0u64; self.num_subpops];
        for k in self.labels.iter().flatten() {
            sizes[*k] += 1;
        }
        sizes
    }

    pub fn members(&self, k: usize) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter_map(|(i, l)| (*l == Some(k)).then_some(i))
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ArdEntry {
    pub row: usize,
    pub col: usize,
    pub count: u64,
}

/// Sparse node-by-subpopulation link counts with subpopulation sizes.
///
/// Entries are kept sorted by `(row, col)`; a column index gives the same
/// entries ordered by `(col, row)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ArdMatrix {
    num_nodes: usize,
    num_subpops: usize,
    entries: Vec<ArdEntry>,
    subpop_sizes: Vec<u64>,
    row_offsets: Vec<usize>,
    col_offsets: Vec<usize>,
    col_order: Vec<usize>,
}

impl ArdMatrix {
    pub fn new(
        num_nodes: usize,
        num_subpops: usize,
        mut entries: Vec<ArdEntry>,
        subpop_sizes: Vec<u64>,
    ) -> Result<Self> {
        if subpop_sizes.len() != num_subpops {
            return Err(Error::DimensionMismatch(format!(
                "{} subpopulation sizes for {num_subpops} subpopulations",
                subpop_sizes.len()
            )));
        }
        if let Some(k) = subpop_sizes.iter().position(|&n| n == 0) {
            return Err(Error::Data(format!("subpopulation {k} is empty")));
        }
        entries.retain(|e| e.count > 0);
        for e in &entries {
            if e.row >= num_nodes || e.col >= num_subpops {
                return Err(Error::Data(format!(
                    "entry ({}, {}) out of range for {num_nodes}x{num_subpops}",
                    e.row, e.col
                )));
            }
            if e.count > subpop_sizes[e.col] {
                return Err(Error::Data(format!(
                    "count {} at ({}, {}) exceeds subpopulation size {}",
                    e.count, e.row, e.col, subpop_sizes[e.col]
                )));
            }
        }
        entries.sort_unstable();
        if let Some(w) = entries
            .windows(2)
            .find(|w| (w[0].row, w[0].col) == (w[1].row, w[1].col))
        {
            return Err(Error::Data(format!(
                "duplicate entry ({}, {})",
                w[0].row, w[0].col
            )));
        }

        let mut row_offsets = vec![0usize; num_nodes + 1];
        let mut col_offsets = vec![0usize; num_subpops + 1];
        for e in &entries {
            row_offsets[e.row + 1] += 1;
            col_offsets[e.col + 1] += 1;
        }
        for i in 0..num_nodes {
            row_offsets[i + 1] += row_offsets[i];
        }
        for k in 0..num_subpops {
            col_offsets[k + 1] += col_offsets[k];
        }
        let mut col_order: Vec<usize> = (0..entries.len()).collect();
        col_order.sort_by_key(|&e| (entries[e].col, entries[e].row));

        Ok(ArdMatrix {
            num_nodes,
            num_subpops,
            entries,
            subpop_sizes,
            row_offsets,
            col_offsets,
            col_order,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_subpops(&self) -> usize {
        self.num_subpops
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[ArdEntry] {
        &self.entries
    }

    pub fn subpop_sizes(&self) -> &[u64] {
        &self.subpop_sizes
    }

    /// Index range into [`entries`](Self::entries) for row `i`.
    pub fn row_range(&self, i: usize) -> std::ops::Range<usize> {
        self.row_offsets[i]..self.row_offsets[i + 1]
    }

    /// Entry indices of column `k`, ordered by row.
    pub fn col_entry_indices(&self, k: usize) -> &[usize] {
        &self.col_order[self.col_offsets[k]..self.col_offsets[k + 1]]
    }

    pub fn get(&self, row: usize, col: usize) -> u64 {
        let range = self.row_range(row);
        self.entries[range]
            .binary_search_by_key(&col, |e| e.col)
            .map_or(0, |j| self.entries[self.row_offsets[row] + j].count)
    }

    pub fn row_total(&self, i: usize) -> u64 {
        self.entries[self.row_range(i)].iter().map(|e| e.count).sum()
    }

    /// Sub-matrix over the given rows and columns, re-indexed by position.
    /// Subpopulation sizes are carried over unchanged.
    pub fn restrict(&self, rows: &[usize], cols: &[usize]) -> Result<ArdMatrix> {
        let mut col_pos = vec![usize::MAX; self.num_subpops];
        for (j, &k) in cols.iter().enumerate() {
            if k >= self.num_subpops {
                return Err(Error::DimensionMismatch(format!("subpopulation {k} out of range")));
            }
            col_pos[k] = j;
        }
        let mut entries = Vec::new();
        for (r, &i) in rows.iter().enumerate() {
            if i >= self.num_nodes {
                return Err(Error::DimensionMismatch(format!("row {i} out of range")));
            }
            for e in &self.entries[self.row_range(i)] {
                if col_pos[e.col] != usize::MAX {
                    entries.push(ArdEntry {
                        row: r,
                        col: col_pos[e.col],
                        count: e.count,
                    });
                }
            }
        }
        let sizes = cols.iter().map(|&k| self.subpop_sizes[k]).collect();
        ArdMatrix::new(rows.len(), cols.len(), entries, sizes)
    }
}

/// Count each sampled node's links into every subpopulation.
///
/// Row `r` of the result corresponds to `sampled_nodes[r]`; subpopulation
/// sizes come from the full assignment, not just the sampled rows.
pub fn aggregate_ard(
    graph: &DirectedGraph,
    subpops: &SubpopulationMap,
    sampled_nodes: &[usize],
) -> Result<ArdMatrix> {
    if subpops.num_nodes() != graph.num_nodes() {
        return Err(Error::DimensionMismatch(format!(
            "subpopulation map covers {} nodes, graph has {}",
            subpops.num_nodes(),
            graph.num_nodes()
        )));
    }
    let mut seen = vec![false; graph.num_nodes()];
    for &v in sampled_nodes {
        if v >= graph.num_nodes() {
            return Err(Error::Data(format!("sampled node {v} out of range")));
        }
        if std::mem::replace(&mut seen[v], true) {
            return Err(Error::Data(format!("sampled node {v} listed twice")));
        }
    }
    let sizes = subpops.sizes();
    let mut entries = Vec::new();
    let mut counts = vec![0u64; subpops.num_subpops()];
    let mut touched = Vec::new();
    for (row, &v) in sampled_nodes.iter().enumerate() {
        for &(_, dst) in graph.out_edges(v) {
            let k = subpops
                .label(dst)
                .ok_or_else(|| Error::Data(format!("node {dst} has no subpopulation")))?;
            if counts[k] == 0 {
                touched.push(k);
            }
            counts[k] += 1;
        }
        touched.sort_unstable();
        for &k in &touched {
            entries.push(ArdEntry {
                row,
                col: k,
                count: counts[k],
            });
            counts[k] = 0;
        }
        touched.clear();
    }
    ArdMatrix::new(sampled_nodes.len(), subpops.num_subpops(), entries, sizes)
}
