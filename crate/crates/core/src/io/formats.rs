//! Tab-separated edge lists, subpopulation maps, ARD files and
//! sectioned ground-truth files. Floats are written with the shortest
//! representation that parses back to the same value.

use std::fmt::Write;

use crate::error::{Error, Result};
use crate::graph::{ArdEntry, ArdMatrix, DirectedGraph, SubpopulationMap};
use crate::matrix::Matrix;
use crate::sim::GroundTruth;

fn data_err(source: &str, line: usize, message: impl std::fmt::Display) -> Error {
    Error::Data(format!("{source}:{line}: {message}"))
}

/// Non-empty lines with their 1-based numbers.
fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(j, l)| (j + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty())
}

fn parse_fields<T: std::str::FromStr>(source: &str, line: usize, text: &str, expected: usize) -> Result<Vec<T>> {
    let fields: Vec<&str> = text.split('\t').collect();
    if fields.len() != expected {
        return Err(data_err(source, line, format!("expected {expected} tab-separated fields, found {}", fields.len())));
    }
    fields
        .iter()
        .map(|f| f.trim().parse::<T>().map_err(|_| data_err(source, line, format!("cannot parse {f:?}"))))
        .collect()
}

/// Edges are stored without a node count; it is one past the largest id
/// unless `num_nodes` is given.
pub fn parse_edge_list(text: &str, num_nodes: Option<usize>, source: &str) -> Result<DirectedGraph> {
    let mut edges = Vec::new();
    for (line, l) in lines(text) {
        let f: Vec<usize> = parse_fields(source, line, l, 2)?;
        edges.push((f[0], f[1]));
    }
    let n = num_nodes.unwrap_or_else(|| edges.iter().map(|&(a, b)| a.max(b) + 1).max().unwrap_or(0));
    DirectedGraph::new(n, edges).map_err(|e| Error::Data(format!("{source}: {e}")))
}

pub fn format_edge_list(graph: &DirectedGraph) -> String {
    let mut out = String::with_capacity(graph.num_edges() * 12);
    for &(a, b) in graph.edges() {
        writeln!(out, "{a}\t{b}").unwrap();
    }
    out
}

/// Node ids must be 0..N in any order; every node appears once.
pub fn parse_subpop_map(text: &str, source: &str) -> Result<SubpopulationMap> {
    let mut pairs = Vec::new();
    for (line, l) in lines(text) {
        let f: Vec<usize> = parse_fields(source, line, l, 2)?;
        pairs.push((line, f[0], f[1]));
    }
    let n = pairs.iter().map(|p| p.1 + 1).max().unwrap_or(0);
    let k = pairs.iter().map(|p| p.2 + 1).max().unwrap_or(0);
    let mut labels = vec![None; n];
    for &(line, node, subpop) in &pairs {
        if labels[node].replace(subpop).is_some() {
            return Err(data_err(source, line, format!("node {node} listed twice")));
        }
    }
    SubpopulationMap::new(k, labels).map_err(|e| Error::Data(format!("{source}: {e}")))
}

pub fn format_subpop_map(map: &SubpopulationMap) -> String {
    let mut out = String::new();
    for (node, label) in map.labels().iter().enumerate() {
        if let Some(k) = label {
            writeln!(out, "{node}\t{k}").unwrap();
        }
    }
    out
}

/// One node id per line.
pub fn parse_node_list(text: &str, source: &str) -> Result<Vec<usize>> {
    lines(text)
        .map(|(line, l)| parse_fields::<usize>(source, line, l, 1).map(|f| f[0]))
        .collect()
}

pub fn format_node_list(ids: &[usize]) -> String {
    let mut out = String::new();
    for id in ids {
        writeln!(out, "{id}").unwrap();
    }
    out
}

pub fn parse_ard(text: &str, source: &str) -> Result<ArdMatrix> {
    let mut it = lines(text);
    let (line, header) = it.next().ok_or_else(|| Error::Data(format!("{source}: empty ARD file")))?;
    let dims: Vec<usize> = parse_fields(source, line, header, 2)?;
    let (n, k) = (dims[0], dims[1]);
    let (line, sizes_line) = it.next().ok_or_else(|| data_err(source, line + 1, "missing sizes line"))?;
    let mut fields = sizes_line.split('\t');
    if fields.next() != Some("sizes") {
        return Err(data_err(source, line, "expected a line starting with \"sizes\""));
    }
    let sizes: Vec<u64> = fields
        .map(|f| f.trim().parse().map_err(|_| data_err(source, line, format!("cannot parse size {f:?}"))))
        .collect::<Result<_>>()?;
    if sizes.len() != k {
        return Err(data_err(source, line, format!("{} sizes for {k} subpopulations", sizes.len())));
    }
    let mut entries = Vec::new();
    for (line, l) in it {
        let f: Vec<u64> = parse_fields(source, line, l, 3)?;
        entries.push(ArdEntry {
            row: f[0] as usize,
            col: f[1] as usize,
            count: f[2],
        });
    }
    ArdMatrix::new(n, k, entries, sizes).map_err(|e| Error::Data(format!("{source}: {e}")))
}

pub fn format_ard(ard: &ArdMatrix) -> String {
    let mut out = format!("{}\t{}\nsizes", ard.num_nodes(), ard.num_subpops());
    for s in ard.subpop_sizes() {
        write!(out, "\t{s}").unwrap();
    }
    out.push('\n');
    for e in ard.entries() {
        writeln!(out, "{}\t{}\t{}", e.row, e.col, e.count).unwrap();
    }
    out
}

fn write_matrix(out: &mut String, m: &Matrix) {
    for row in m.iter_rows() {
        let cells: Vec<String> = row.iter().map(|x| x.to_string()).collect();
        writeln!(out, "{}", cells.join("\t")).unwrap();
    }
}

pub fn format_ground_truth(truth: &GroundTruth) -> String {
    let mut out = String::new();
    let (n, d, k) = (truth.num_nodes(), truth.num_communities(), truth.num_subpops());
    writeln!(out, "[memberships]\t{n}\t{d}").unwrap();
    write_matrix(&mut out, &truth.memberships);
    writeln!(out, "[blockmatrix]\t{d}").unwrap();
    write_matrix(&mut out, &truth.blockmatrix);
    writeln!(out, "[centers]\t{k}\t{d}").unwrap();
    write_matrix(&mut out, &truth.subpop_centers);
    writeln!(out, "[assignment]\t{}", truth.subpop_assignment.len()).unwrap();
    for (node, s) in truth.subpop_assignment.iter().enumerate() {
        writeln!(out, "{node}\t{s}").unwrap();
    }
    out
}

struct Sections<'a, I: Iterator<Item = (usize, &'a str)>> {
    lines: std::iter::Peekable<I>,
    source: &'a str,
}

impl<'a, I: Iterator<Item = (usize, &'a str)>> Sections<'a, I> {
    fn header(&mut self, name: &str, arity: usize) -> Result<(usize, Vec<usize>)> {
        let (line, l) = self
            .lines
            .next()
            .ok_or_else(|| Error::Data(format!("{}: missing [{name}] section", self.source)))?;
        let mut fields = l.split('\t');
        if fields.next() != Some(&format!("[{name}]")[..]) {
            return Err(data_err(self.source, line, format!("expected [{name}] section")));
        }
        let rest: Vec<&str> = fields.collect();
        let dims = parse_fields::<usize>(self.source, line, &rest.join("\t"), arity)?;
        Ok((line, dims))
    }

    fn matrix(&mut self, rows: usize, cols: usize) -> Result<Matrix> {
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let (line, l) = self
                .lines
                .next()
                .ok_or_else(|| Error::Data(format!("{}: truncated matrix", self.source)))?;
            data.extend(parse_fields::<f64>(self.source, line, l, cols)?);
        }
        Matrix::from_vec(rows, cols, data)
    }
}

pub fn parse_ground_truth(text: &str, source: &str) -> Result<GroundTruth> {
    let mut s = Sections {
        lines: lines(text).peekable(),
        source,
    };
    let (_, dims) = s.header("memberships", 2)?;
    let (n, d) = (dims[0], dims[1]);
    let memberships = s.matrix(n, d)?;
    let (line, dims) = s.header("blockmatrix", 1)?;
    if dims[0] != d {
        return Err(data_err(source, line, format!("blockmatrix is {0}x{0} for {d} communities", dims[0])));
    }
    let blockmatrix = s.matrix(d, d)?;
    let (line, dims) = s.header("centers", 2)?;
    if dims[1] != d {
        return Err(data_err(source, line, format!("centers have {} columns for {d} communities", dims[1])));
    }
    let subpop_centers = s.matrix(dims[0], d)?;
    let k = dims[0];
    let (line, dims) = s.header("assignment", 1)?;
    if dims[0] != n {
        return Err(data_err(source, line, format!("{} assignments for {n} nodes", dims[0])));
    }
    let mut subpop_assignment = Vec::with_capacity(n);
    for node in 0..n {
        let (line, l) = s
            .lines
            .next()
            .ok_or_else(|| Error::Data(format!("{source}: truncated assignment section")))?;
        let f: Vec<usize> = parse_fields(source, line, l, 2)?;
        if f[0] != node || f[1] >= k {
            return Err(data_err(source, line, format!("bad assignment {} -> {}", f[0], f[1])));
        }
        subpop_assignment.push(f[1]);
    }
    if let Some((line, _)) = s.lines.next() {
        return Err(data_err(source, line, "trailing content"));
    }
    Ok(GroundTruth {
        memberships,
        blockmatrix,
        subpop_centers,
        subpop_assignment,
    })
}
