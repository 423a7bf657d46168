//! Spectral initialization: truncated SVD of the size-normalized ARD
//! matrix, k-means on both factor embeddings, soft memberships from the
//! center distances.

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::ArdMatrix;
use crate::linalg::{kmeans, max_weight_assignment, randomized_svd, SparseMatrix};
use crate::matrix::Matrix;
use crate::model::{VariationalState, BLOCK_EPS};
use crate::rng;

#[derive(Clone, Debug, PartialEq)]
pub struct InitConfig {
    /// Pseudo-count mass spread over the soft memberships.
    pub tau: f64,
    pub kmeans_restarts: usize,
    pub max_iter: usize,
    pub oversample: usize,
    pub power_iters: usize,
}

impl Default for InitConfig {
    fn default() -> Self {
        InitConfig {
            tau: 10.0,
            kmeans_restarts: 5,
            max_iter: 100,
            oversample: 10,
            power_iters: 4,
        }
    }
}

#[derive(Clone, Debug)]
pub struct InitOutcome {
    pub state: VariationalState,
    /// The spectrum was degenerate and a jittered uniform start was used.
    pub used_fallback: bool,
    pub singular_values: Vec<f64>,
}

/// Dirichlet parameters `1 + tau * softmax(-d² / t)` per row of squared
/// center distances, with t the median squared distance.
pub fn soft_assignments(sq_dists: &Matrix, tau: f64) -> Matrix {
    let mut all: Vec<f64> = sq_dists.as_slice().to_vec();
    all.sort_by(|a, b| a.total_cmp(b));
    let median = if all.is_empty() { 0.0 } else { all[all.len() / 2] };
    let temp = if median > 1e-12 { median } else { 1.0 };
    let mut out = Matrix::zeros(sq_dists.rows(), sq_dists.cols());
    for (r, dists) in sq_dists.iter_rows().enumerate() {
        let logits: Vec<f64> = dists.iter().map(|d| -d / temp).collect();
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
        let total: f64 = weights.iter().sum();
        for (x, w) in out.row_mut(r).iter_mut().zip(&weights) {
            *x = 1.0 + tau * w / total;
        }
    }
    out
}

fn unit_rows(m: &nalgebra::DMatrix<f64>, scale: &[f64]) -> Matrix {
    let mut out = Matrix::zeros(m.nrows(), m.ncols());
    for r in 0..m.nrows() {
        let row = out.row_mut(r);
        for (c, x) in row.iter_mut().enumerate() {
            *x = m[(r, c)] * scale[c];
        }
        let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            row.iter_mut().for_each(|x| *x /= norm);
        }
    }
    out
}

/// Average of y / N_k over each (node cluster, subpop cluster) block,
/// weighted by subpopulation size.
fn block_averages(ard: &ArdMatrix, node_labels: &[usize], subpop_labels: &[usize], d: usize) -> Matrix {
    let sizes = ard.subpop_sizes();
    let mut node_counts = vec![0.0; d];
    node_labels.iter().for_each(|&a| node_counts[a] += 1.0);
    let mut size_totals = vec![0.0; d];
    for (k, &c) in subpop_labels.iter().enumerate() {
        size_totals[c] += sizes[k] as f64;
    }
    let mut links = Matrix::zeros(d, d);
    for e in ard.entries() {
        links[(node_labels[e.row], subpop_labels[e.col])] += e.count as f64;
    }
    let mut out = Matrix::zeros(d, d);
    for m in 0..d {
        for n in 0..d {
            let exposure = node_counts[m] * size_totals[n];
            let value = if exposure > 0.0 { links[(m, n)] / exposure } else { 0.0 };
            out[(m, n)] = value.clamp(BLOCK_EPS, 1.0 - BLOCK_EPS);
        }
    }
    out
}

fn fallback(ard: &ArdMatrix, d: usize, seed: u64, tau: f64) -> Result<VariationalState> {
    let mut r = rng::stream(seed, &[rng::STREAM_INIT, 1]);
    let mut jittered = |rows: usize| {
        let data = (0..rows * d)
            .map(|_| 1.0 + tau / d as f64 * (1.0 + 0.1 * r.random::<f64>()))
            .collect();
        Matrix::from_vec(rows, d, data)
    };
    let gamma = jittered(ard.num_nodes())?;
    let phi = jittered(ard.num_subpops())?;
    let total: f64 = ard.entries().iter().map(|e| e.count as f64).sum();
    let exposure: f64 = ard.num_nodes() as f64 * ard.subpop_sizes().iter().sum::<u64>() as f64;
    let density = (total / exposure).clamp(BLOCK_EPS, 1.0 - BLOCK_EPS);
    VariationalState::new(gamma, phi, Matrix::filled(d, d, density))
}

pub fn svd_initialize(ard: &ArdMatrix, num_communities: usize, seed: u64) -> Result<InitOutcome> {
    svd_initialize_with(ard, num_communities, seed, &InitConfig::default())
}

/// Seeded spectral start. Node and subpopulation clusters are matched by
/// a maximum-weight assignment on the block averages so that matched
/// pairs sit on the diagonal.
pub fn svd_initialize_with(
    ard: &ArdMatrix,
    num_communities: usize,
    seed: u64,
    config: &InitConfig,
) -> Result<InitOutcome> {
    let d = num_communities;
    let (n, k) = (ard.num_nodes(), ard.num_subpops());
    if d == 0 || d > n.min(k) {
        return Err(Error::InvalidParameter(format!(
            "cannot initialize {d} communities from a {n} x {k} ARD matrix"
        )));
    }
    if !(config.tau > 0.0) {
        return Err(Error::InvalidParameter("init tau must be positive".into()));
    }
    let sizes = ard.subpop_sizes();
    let a = SparseMatrix {
        rows: n,
        cols: k,
        triplets: ard
            .entries()
            .iter()
            .map(|e| (e.row, e.col, e.count as f64 / sizes[e.col] as f64))
            .collect(),
    };
    let degenerate = |sv: &[f64]| sv.len() < d || !(sv[0] > 0.0) || sv[d - 1] <= 1e-10 * sv[0];
    if ard.nnz() == 0 {
        log::warn!("ARD matrix is empty; using a jittered uniform start");
        return Ok(InitOutcome {
            state: fallback(ard, d, seed, config.tau)?,
            used_fallback: true,
            singular_values: Vec::new(),
        });
    }
    let svd = randomized_svd(
        &a,
        d,
        config.oversample,
        config.power_iters,
        &mut rng::stream(seed, &[rng::STREAM_INIT, 0]),
    );
    if degenerate(&svd.singular_values) {
        log::warn!(
            "ARD spectrum is rank deficient at {d} communities ({:?}); using a jittered uniform start",
            svd.singular_values
        );
        return Ok(InitOutcome {
            state: fallback(ard, d, seed, config.tau)?,
            used_fallback: true,
            singular_values: svd.singular_values,
        });
    }
    let node_points = unit_rows(&svd.u, &svd.singular_values);
    let subpop_points = unit_rows(&svd.v, &svd.singular_values);
    let nodes = kmeans(
        &node_points,
        d,
        config.kmeans_restarts,
        config.max_iter,
        &mut rng::stream(seed, &[rng::STREAM_INIT, 2]),
    );
    let subpops = kmeans(
        &subpop_points,
        d,
        config.kmeans_restarts,
        config.max_iter,
        &mut rng::stream(seed, &[rng::STREAM_INIT, 3]),
    );
    let raw = block_averages(ard, &nodes.labels, &subpops.labels, d);
    // perm[m] = subpop cluster matched to node cluster m
    let perm = max_weight_assignment(&raw);
    let mut relabel = vec![0; d];
    for (m, &c) in perm.iter().enumerate() {
        relabel[c] = m;
    }
    let subpop_labels: Vec<usize> = subpops.labels.iter().map(|&c| relabel[c]).collect();
    let gamma = soft_assignments(&nodes.sq_dists, config.tau);
    let phi = soft_assignments(&subpops.sq_dists.permuted_cols(&perm), config.tau);
    let blockmatrix = block_averages(ard, &nodes.labels, &subpop_labels, d);
    Ok(InitOutcome {
        state: VariationalState::new(gamma, phi, blockmatrix)?,
        used_fallback: false,
        singular_values: svd.singular_values,
    })
}
