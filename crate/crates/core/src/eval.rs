//! Evaluation metrics: NMI, hard assignments, blockmatrix error,
//! predictive likelihood, ROC/AUC with average rank, Dirichlet KL.

use std::collections::{BTreeMap, HashSet};

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::DirectedGraph;
use crate::linalg::{kmeans, max_weight_assignment, randomized_svd, SparseMatrix};
use crate::matrix::Matrix;
use crate::model::VariationalState;
use crate::rng;
use crate::special::{digamma, ln_gamma};

fn sorted_sum(mut terms: Vec<f64>) -> f64 {
    terms.sort_by(|a, b| a.total_cmp(b));
    terms.iter().sum()
}

fn entropy_nats(counts: impl Iterator<Item = usize>, n: f64) -> f64 {
    -sorted_sum(
        counts
            .map(|c| {
                let p = c as f64 / n;
                p * p.ln()
            })
            .collect(),
    )
}

/// Normalized mutual information `2 I(X;Y) / (H(X) + H(Y))`.
///
/// Terms are summed in sorted order, so the value is exactly symmetric and
/// invariant under relabeling either argument.
pub fn nmi(x: &[usize], y: &[usize]) -> Result<f64> {
    if x.is_empty() {
        return Err(Error::InvalidParameter("nmi of empty labelings".into()));
    }
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "labelings of length {} and {}",
            x.len(),
            y.len()
        )));
    }
    let n = x.len() as f64;
    let mut joint: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut mx: BTreeMap<usize, usize> = BTreeMap::new();
    let mut my: BTreeMap<usize, usize> = BTreeMap::new();
    for (&a, &b) in x.iter().zip(y) {
        *joint.entry((a, b)).or_default() += 1;
        *mx.entry(a).or_default() += 1;
        *my.entry(b).or_default() += 1;
    }
    let hx = entropy_nats(mx.values().copied(), n);
    let hy = entropy_nats(my.values().copied(), n);
    if hx == 0.0 && hy == 0.0 {
        return Ok(1.0);
    }
    if hx == 0.0 || hy == 0.0 {
        return Ok(0.0);
    }
    let mi = sorted_sum(
        joint
            .iter()
            .map(|(&(a, b), &c)| {
                let c = c as f64;
                c / n * (c * n / (mx[&a] as f64 * my[&b] as f64)).ln()
            })
            .collect(),
    );
    Ok((2.0 * mi / (hx + hy)).clamp(0.0, 1.0))
}

/// Row-wise argmax, ties to the lowest index.
pub fn argmax_rows(m: &Matrix) -> Vec<usize> {
    m.iter_rows()
        .map(|row| {
            let mut best = 0;
            for (c, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = c;
                }
            }
            best
        })
        .collect()
}

/// Community with the largest Dirichlet mean for every node.
pub fn hard_assign(state: &VariationalState) -> Vec<usize> {
    argmax_rows(&state.node_memberships())
}

/// `alignment[t]` = estimated community matched to true community t,
/// maximizing agreement on the confusion matrix.
pub fn align_labels(truth: &[usize], estimate: &[usize], d: usize) -> Result<Vec<usize>> {
    if truth.len() != estimate.len() {
        return Err(Error::DimensionMismatch(format!(
            "labelings of length {} and {}",
            truth.len(),
            estimate.len()
        )));
    }
    let mut confusion = Matrix::zeros(d, d);
    for (&t, &e) in truth.iter().zip(estimate) {
        if t >= d || e >= d {
            return Err(Error::InvalidParameter(format!("label out of range for D = {d}")));
        }
        confusion[(t, e)] += 1.0;
    }
    Ok(max_weight_assignment(&confusion))
}

fn check_permutation(perm: &[usize], d: usize) -> Result<()> {
    let mut seen = vec![false; d];
    if perm.len() != d {
        return Err(Error::DimensionMismatch(format!("alignment of length {} for D = {d}", perm.len())));
    }
    for &p in perm {
        if p >= d || seen[p] {
            return Err(Error::InvalidParameter(format!("{perm:?} is not a permutation")));
        }
        seen[p] = true;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlockmatrixError {
    /// Squared Frobenius distance after alignment.
    pub squared_error: f64,
    /// Estimate reordered into the truth's labels.
    pub aligned: Matrix,
    /// Diagonal of `aligned`.
    pub diagonal: Vec<f64>,
}

/// Compare `estimate` with `truth` after relabeling the estimate with
/// `alignment` (see [`align_labels`]).
pub fn blockmatrix_error(estimate: &Matrix, truth: &Matrix, alignment: &[usize]) -> Result<BlockmatrixError> {
    let d = truth.rows();
    if truth.cols() != d || estimate.rows() != d || estimate.cols() != d {
        return Err(Error::DimensionMismatch(format!(
            "estimate {}x{} vs truth {}x{}",
            estimate.rows(),
            estimate.cols(),
            truth.rows(),
            truth.cols()
        )));
    }
    check_permutation(alignment, d)?;
    let aligned = estimate.permuted(alignment);
    let squared_error = aligned
        .as_slice()
        .iter()
        .zip(truth.as_slice())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    let diagonal = (0..d).map(|m| aligned[(m, m)]).collect();
    Ok(BlockmatrixError {
        squared_error,
        aligned,
        diagonal,
    })
}

/// `E[π_a]ᵀ B E[π_b]` for every pair.
pub fn predictive_likelihood(state: &VariationalState, pairs: &[(usize, usize)]) -> Result<Vec<f64>> {
    let pi = state.node_memberships();
    let n = pi.rows();
    pairs
        .iter()
        .map(|&(a, b)| {
            if a >= n || b >= n {
                return Err(Error::InvalidParameter(format!("pair ({a}, {b}) out of range for {n} nodes")));
            }
            Ok(state.blockmatrix.bilinear(pi.row(a), pi.row(b)))
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScoredPair {
    pub src: usize,
    pub dst: usize,
    pub score: f64,
    pub is_link: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RocSummary {
    /// (false positive rate, true positive rate) from (0, 0) to (1, 1).
    pub curve: Vec<(f64, f64)>,
    pub auc: f64,
    /// Mean descending midrank of the links divided by the number of pairs.
    pub avg_rank: f64,
}

pub fn roc_auc(scored: &[ScoredPair]) -> Result<RocSummary> {
    if let Some(p) = scored.iter().find(|p| !p.score.is_finite()) {
        return Err(Error::Data(format!("non-finite score for pair ({}, {})", p.src, p.dst)));
    }
    let pos = scored.iter().filter(|p| p.is_link).count();
    let neg = scored.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::Data(format!("ROC needs links and nonlinks, got {pos} and {neg}")));
    }
    let mut order: Vec<&ScoredPair> = scored.iter().collect();
    order.sort_by(|a, b| b.score.total_cmp(&a.score));
    let mut curve = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut auc_twice = 0.0;
    let mut rank_sum = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start;
        while end < order.len() && order[end].score == order[start].score {
            end += 1;
        }
        let group = &order[start..end];
        let gp = group.iter().filter(|p| p.is_link).count();
        let gn = group.len() - gp;
        // every earlier positive outranks this group's negatives; ties count half
        auc_twice += (gn as f64) * (2.0 * tp as f64 + gp as f64);
        let midrank = (start + 1 + end) as f64 / 2.0;
        rank_sum += gp as f64 * midrank;
        tp += gp;
        fp += gn;
        curve.push((fp as f64 / neg as f64, tp as f64 / pos as f64));
        start = end;
    }
    let auc = auc_twice / (2.0 * pos as f64 * neg as f64);
    Ok(RocSummary {
        curve,
        auc,
        avg_rank: rank_sum / pos as f64 / scored.len() as f64,
    })
}

/// KL(Dir(a) ‖ Dir(b)).
pub fn dirichlet_kl(a: &[f64], b: &[f64]) -> f64 {
    let sa: f64 = a.iter().sum();
    let sb: f64 = b.iter().sum();
    let psi_sa = digamma(sa);
    let mut kl = ln_gamma(sa) - ln_gamma(sb);
    for (&x, &y) in a.iter().zip(b) {
        kl += ln_gamma(y) - ln_gamma(x) + (x - y) * (digamma(x) - psi_sa);
    }
    kl.max(0.0)
}

/// Per-node KL(Dir(γ_prev,i) ‖ Dir(γ_next,i)).
pub fn membership_kl(prev: &VariationalState, next: &VariationalState) -> Result<Vec<f64>> {
    if prev.gamma.rows() != next.gamma.rows() || prev.gamma.cols() != next.gamma.cols() {
        return Err(Error::DimensionMismatch(format!(
            "states of shape {}x{} and {}x{}",
            prev.gamma.rows(),
            prev.gamma.cols(),
            next.gamma.rows(),
            next.gamma.cols()
        )));
    }
    Ok(prev
        .gamma
        .iter_rows()
        .zip(next.gamma.iter_rows())
        .map(|(a, b)| if a == b { 0.0 } else { dirichlet_kl(a, b) })
        .collect())
}

/// `count` distinct ordered non-links drawn uniformly, self-pairs excluded.
pub fn sample_nonlinks(graph: &DirectedGraph, count: usize, seed: u64) -> Result<Vec<(usize, usize)>> {
    let n = graph.num_nodes();
    let available = (n * n.saturating_sub(1)).saturating_sub(graph.num_edges());
    if count > available {
        return Err(Error::InvalidParameter(format!(
            "asked for {count} nonlinks but only {available} exist"
        )));
    }
    let mut r = rng::stream(seed, &[rng::STREAM_NEGATIVES]);
    let mut seen = HashSet::with_capacity(count);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let a = r.random_range(0..n);
        let b = r.random_range(0..n);
        if a != b && !graph.has_edge(a, b) && seen.insert((a, b)) {
            out.push((a, b));
        }
    }
    Ok(out)
}

/// Links plus an equal number of sampled nonlinks, scored by predictive
/// likelihood.
pub fn score_links(state: &VariationalState, graph: &DirectedGraph, seed: u64) -> Result<Vec<ScoredPair>> {
    let links = graph.edges().to_vec();
    let nonlinks = sample_nonlinks(graph, links.len(), seed)?;
    let mut pairs = links.clone();
    pairs.extend_from_slice(&nonlinks);
    let scores = predictive_likelihood(state, &pairs)?;
    Ok(pairs
        .iter()
        .zip(scores)
        .enumerate()
        .map(|(j, (&(src, dst), score))| ScoredPair {
            src,
            dst,
            score,
            is_link: j < links.len(),
        })
        .collect())
}

/// Naive MMSB block estimate from a fully observed graph with known hard
/// labels: links over ordered non-self pairs in each block.
pub fn induced_block_density(graph: &DirectedGraph, labels: &[usize], d: usize) -> Result<Matrix> {
    if labels.len() != graph.num_nodes() {
        return Err(Error::DimensionMismatch(format!(
            "{} labels for {} nodes",
            labels.len(),
            graph.num_nodes()
        )));
    }
    let mut sizes = vec![0.0; d];
    for &l in labels {
        if l >= d {
            return Err(Error::InvalidParameter(format!("label {l} out of range for D = {d}")));
        }
        sizes[l] += 1.0;
    }
    let mut links = Matrix::zeros(d, d);
    for &(a, b) in graph.edges() {
        links[(labels[a], labels[b])] += 1.0;
    }
    let mut out = Matrix::zeros(d, d);
    for m in 0..d {
        for n in 0..d {
            let pairs = if m == n { sizes[m] * (sizes[m] - 1.0) } else { sizes[m] * sizes[n] };
            out[(m, n)] = if pairs > 0.0 { links[(m, n)] / pairs } else { 0.0 };
        }
    }
    Ok(out)
}

/// Label-free block estimate from an observed graph alone: spectral
/// clustering of the adjacency matrix (out- and in-factors of a rank-D
/// SVD, rows scaled to unit length, k-means) followed by
/// [`induced_block_density`]. Returns the hard labels and the estimate.
pub fn spectral_block_density(graph: &DirectedGraph, d: usize, seed: u64) -> Result<(Vec<usize>, Matrix)> {
    let n = graph.num_nodes();
    if d == 0 || d > n {
        return Err(Error::InvalidParameter(format!("cannot cluster {n} nodes into {d} blocks")));
    }
    let a = SparseMatrix {
        rows: n,
        cols: n,
        triplets: graph.edges().iter().map(|&(s, t)| (s, t, 1.0)).collect(),
    };
    let svd = randomized_svd(&a, d, 10, 4, &mut rng::stream(seed, &[rng::STREAM_INIT, 4]));
    let rank = svd.singular_values.len();
    let mut points = Matrix::zeros(n, 2 * rank);
    for i in 0..n {
        let row = points.row_mut(i);
        for c in 0..rank {
            row[c] = svd.u[(i, c)] * svd.singular_values[c];
            row[rank + c] = svd.v[(i, c)] * svd.singular_values[c];
        }
        let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            row.iter_mut().for_each(|x| *x /= norm);
        }
    }
    let labels = kmeans(&points, d, 5, 100, &mut rng::stream(seed, &[rng::STREAM_INIT, 5])).labels;
    let density = induced_block_density(graph, &labels, d)?;
    Ok((labels, density))
}

/// Sample mean and standard error (sample SD / √n).
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(score: f64, is_link: bool) -> ScoredPair {
        ScoredPair { src: 0, dst: 1, score, is_link }
    }

    #[test]
    fn nmi_examples() {
        assert_eq!(nmi(&[0, 1, 1, 2], &[0, 1, 1, 2]).unwrap(), 1.0);
        assert_eq!(nmi(&[0, 0, 0, 0], &[0, 0, 1, 1]).unwrap(), 0.0);
        assert_eq!(nmi(&[3, 3], &[1, 1]).unwrap(), 1.0);
        // contingency [[1,1],[0,2]]: H(x)=ln2, H(y)=-(1/4 ln 1/4 + 3/4 ln 3/4),
        // I = 1/4 ln 2 + 1/4 ln(2/3) + 1/2 ln(4/3)
        let hx = 2f64.ln();
        let hy = -(0.25 * 0.25f64.ln() + 0.75 * 0.75f64.ln());
        let mi = 0.25 * 2f64.ln() + 0.25 * (2.0f64 / 3.0).ln() + 0.5 * (4.0f64 / 3.0).ln();
        let v = nmi(&[0, 0, 1, 1], &[0, 1, 1, 1]).unwrap();
        assert!((v - 2.0 * mi / (hx + hy)).abs() < 1e-14);
        assert!(nmi(&[], &[]).is_err());
        assert!(nmi(&[0], &[0, 1]).is_err());
    }

    #[test]
    fn hard_assign_ties_go_low() {
        let m = Matrix::from_rows(&[vec![1.0, 1.0, 1.0], vec![10.0, 1.0, 1.0], vec![1.0, 3.0, 3.0]]).unwrap();
        assert_eq!(argmax_rows(&m), vec![0, 0, 1]);
    }

    #[test]
    fn blockmatrix_error_examples() {
        let truth = Matrix::from_rows(&[vec![0.3, 0.01], vec![0.02, 0.1]]).unwrap();
        let e = blockmatrix_error(&truth, &truth, &[0, 1]).unwrap();
        assert_eq!(e.squared_error, 0.0);
        let swapped = truth.permuted(&[1, 0]);
        let e = blockmatrix_error(&swapped, &truth, &[1, 0]).unwrap();
        assert_eq!(e.squared_error, 0.0);
        assert_eq!(e.diagonal, vec![0.3, 0.1]);
        let est = Matrix::from_rows(&[vec![0.25, 0.0], vec![0.05, 0.1]]).unwrap();
        let e = blockmatrix_error(&est, &truth, &[0, 1]).unwrap();
        let hand = 0.05f64.powi(2) + 0.01f64.powi(2) + 0.03f64.powi(2);
        assert!((e.squared_error - hand).abs() < 1e-15);
        assert!(blockmatrix_error(&est, &truth, &[0, 0]).is_err());
        assert!(blockmatrix_error(&Matrix::zeros(3, 3), &truth, &[0, 1]).is_err());
    }

    #[test]
    fn alignment_undoes_relabeling() {
        let truth = [0, 0, 1, 1, 2, 2, 2];
        let est = [2, 2, 0, 0, 1, 1, 0];
        assert_eq!(align_labels(&truth, &est, 3).unwrap(), vec![2, 0, 1]);
    }

    #[test]
    fn predictive_likelihood_limits() {
        let b = Matrix::from_rows(&[vec![0.4, 0.1], vec![0.2, 0.05]]).unwrap();
        let gamma = Matrix::from_rows(&[vec![1e12, 1e-3], vec![1e-3, 1e12], vec![1.0, 1.0]]).unwrap();
        let phi = Matrix::filled(1, 2, 1.0);
        let state = VariationalState::new(gamma, phi, b).unwrap();
        let p = predictive_likelihood(&state, &[(0, 1), (2, 2)]).unwrap();
        assert!((p[0] - 0.1).abs() < 1e-12);
        assert!((p[1] - 0.1875).abs() < 1e-15);
        assert!(predictive_likelihood(&state, &[(0, 3)]).is_err());
    }

    #[test]
    fn roc_examples() {
        let separated = [pair(0.9, true), pair(0.8, true), pair(0.2, false), pair(0.1, false)];
        let r = roc_auc(&separated).unwrap();
        assert_eq!(r.auc, 1.0);
        assert_eq!(r.avg_rank, 1.5 / 4.0);
        assert_eq!(*r.curve.last().unwrap(), (1.0, 1.0));
        let flat = [pair(0.5, true), pair(0.5, false), pair(0.5, false)];
        assert_eq!(roc_auc(&flat).unwrap().auc, 0.5);
        assert!(roc_auc(&[pair(0.5, true)]).is_err());
        assert!(roc_auc(&[pair(f64::NAN, true), pair(0.1, false)]).is_err());
    }

    #[test]
    fn kl_examples() {
        assert_eq!(dirichlet_kl(&[2.0, 1.0], &[2.0, 1.0]), 0.0);
        assert!(dirichlet_kl(&[2.0, 1.0], &[4.0, 2.0]) > 0.0);
        // Dir(2,1) = Beta(2,1) density 2x; Dir(1,2) density 2(1−x):
        // KL = ∫ 2x ln(x/(1−x)) dx = 1
        assert!((dirichlet_kl(&[2.0, 1.0], &[1.0, 2.0]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn nonlinks_avoid_edges_and_self_pairs() {
        let g = DirectedGraph::new(6, vec![(0, 1), (1, 2), (2, 0), (3, 4)]).unwrap();
        let s = sample_nonlinks(&g, 20, 3).unwrap();
        assert_eq!(s.len(), 20);
        let set: HashSet<_> = s.iter().copied().collect();
        assert_eq!(set.len(), 20);
        assert!(s.iter().all(|&(a, b)| a != b && !g.has_edge(a, b)));
        assert_eq!(s, sample_nonlinks(&g, 20, 3).unwrap());
        assert!(sample_nonlinks(&g, 27, 3).is_err());
    }

    #[test]
    fn induced_density_counts_ordered_pairs() {
        let g = DirectedGraph::new(4, vec![(0, 1), (1, 0), (2, 3), (0, 2)]).unwrap();
        let b = induced_block_density(&g, &[0, 0, 1, 1], 2).unwrap();
        assert_eq!(b[(0, 0)], 1.0);
        assert_eq!(b[(1, 1)], 0.5);
        assert_eq!(b[(0, 1)], 0.25);
        assert_eq!(b[(1, 0)], 0.0);
    }

    #[test]
    fn spectral_baseline_separates_two_cliques() {
        let mut edges = Vec::new();
        for a in 0..8 {
            for b in 0..8 {
                if a != b && (a < 4) == (b < 4) {
                    edges.push((a, b));
                }
            }
        }
        edges.push((0, 5));
        let g = DirectedGraph::new(8, edges).unwrap();
        let (labels, b) = spectral_block_density(&g, 2, 1).unwrap();
        assert!(labels[..4].iter().all(|&l| l == labels[0]));
        assert!(labels[4..].iter().all(|&l| l == labels[4]));
        assert_ne!(labels[0], labels[4]);
        assert_eq!(b[(labels[0], labels[0])], 1.0);
        assert_eq!(b[(labels[0], labels[4])], 1.0 / 16.0);
    }

    #[test]
    fn standard_error_matches_hand_value() {
        let (m, se) = mean_and_se(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((se - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
    }
}
