//! Synthetic MMSB networks with planted subpopulations.

use rand::Rng;
use rand_distr::{Distribution, Gamma};

use crate::error::{Error, Result};
use crate::exec;
use crate::graph::{DirectedGraph, SubpopulationMap};
use crate::matrix::Matrix;
use crate::rng;

/// Planted parameters of a simulated network.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruth {
    /// N×D membership vectors π_i.
    pub memberships: Matrix,
    /// D×D link probabilities.
    pub blockmatrix: Matrix,
    /// K×D subpopulation centers η_k.
    pub subpop_centers: Matrix,
    /// Subpopulation of every node.
    pub subpop_assignment: Vec<usize>,
}

impl GroundTruth {
    pub fn num_nodes(&self) -> usize {
        self.memberships.rows()
    }

    pub fn num_communities(&self) -> usize {
        self.blockmatrix.rows()
    }

    pub fn num_subpops(&self) -> usize {
        self.subpop_centers.rows()
    }

    pub fn subpopulation_map(&self) -> SubpopulationMap {
        SubpopulationMap::complete(&self.subpop_assignment)
    }

    /// Mean realized membership of each subpopulation's members.
    pub fn realized_subpop_means(&self) -> Matrix {
        let d = self.num_communities();
        let mut means = Matrix::zeros(self.num_subpops(), d);
        let mut sizes = vec![0usize; self.num_subpops()];
        for (i, &k) in self.subpop_assignment.iter().enumerate() {
            sizes[k] += 1;
            for m in 0..d {
                means[(k, m)] += self.memberships[(i, m)];
            }
        }
        for (k, &s) in sizes.iter().enumerate() {
            means.row_mut(k).iter_mut().for_each(|x| *x /= s.max(1) as f64);
        }
        means
    }
}

/// Pair and edge counts per (sender, receiver) indicator block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockTally {
    dim: usize,
    pub pairs: Vec<u64>,
    pub edges: Vec<u64>,
}

impl BlockTally {
    fn new(dim: usize) -> Self {
        BlockTally {
            dim,
            pairs: vec![0; dim * dim],
            edges: vec![0; dim * dim],
        }
    }

    pub fn pairs_at(&self, s: usize, r: usize) -> u64 {
        self.pairs[s * self.dim + r]
    }

    pub fn edges_at(&self, s: usize, r: usize) -> u64 {
        self.edges[s * self.dim + r]
    }

    fn merge(&mut self, other: &BlockTally) {
        for (a, b) in self.pairs.iter_mut().zip(&other.pairs) {
            *a += b;
        }
        for (a, b) in self.edges.iter_mut().zip(&other.edges) {
            *a += b;
        }
    }
}

pub(crate) fn validate_blockmatrix(b: &Matrix) -> Result<()> {
    if b.rows() == 0 || b.rows() != b.cols() {
        return Err(Error::InvalidParameter(format!(
            "blockmatrix must be square and non-empty, got {}x{}",
            b.rows(),
            b.cols()
        )));
    }
    if let Some(v) = b.as_slice().iter().find(|&&v| !(v > 0.0 && v < 1.0)) {
        return Err(Error::InvalidParameter(format!(
            "blockmatrix entry {v} outside (0, 1)"
        )));
    }
    Ok(())
}

fn validate_positive(name: &str, values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::InvalidParameter(format!("{name} is empty")));
    }
    if let Some(v) = values.iter().find(|&&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidParameter(format!("{name} entry {v} is not positive")));
    }
    Ok(())
}

/// One Dirichlet draw via normalized Gamma variates.
pub fn sample_dirichlet<R: Rng + ?Sized>(alpha: &[f64], rng: &mut R) -> Vec<f64> {
    if alpha.len() == 1 {
        return vec![1.0];
    }
    let mut draw: Vec<f64> = alpha
        .iter()
        .map(|&a| {
            Gamma::new(a.max(f64::MIN_POSITIVE), 1.0)
                .map(|g| g.sample(rng))
                .unwrap_or(0.0)
        })
        .collect();
    let total: f64 = draw.iter().sum();
    if total > 0.0 && total.is_finite() {
        draw.iter_mut().for_each(|x| *x /= total);
    } else {
        // every Gamma variate underflowed; fall back to the dominant coordinate
        let top = argmax(alpha);
        draw.iter_mut().enumerate().for_each(|(m, x)| *x = f64::from(m == top));
    }
    draw
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

#[inline]
fn categorical(cdf: &[f64], u: f64) -> usize {
    cdf.iter().position(|&c| u < c).unwrap_or(cdf.len() - 1)
}

/// Draw π_i ~ Dirichlet(alpha) for every node, then links from the MMSB.
pub fn simulate_mmsb(
    num_nodes: usize,
    alpha: &[f64],
    blockmatrix: &Matrix,
    seed: u64,
) -> Result<(DirectedGraph, Matrix)> {
    validate_positive("alpha", alpha)?;
    validate_blockmatrix(blockmatrix)?;
    if alpha.len() != blockmatrix.rows() {
        return Err(Error::DimensionMismatch(format!(
            "alpha has {} entries for a {}x{} blockmatrix",
            alpha.len(),
            blockmatrix.rows(),
            blockmatrix.cols()
        )));
    }
    if num_nodes < 2 {
        return Err(Error::InvalidParameter("need at least two nodes".into()));
    }
    let d = alpha.len();
    let mut memberships = Matrix::zeros(num_nodes, d);
    let mut rng = rng::stream(seed, &[rng::STREAM_MEMBERSHIPS]);
    for i in 0..num_nodes {
        memberships.row_mut(i).copy_from_slice(&sample_dirichlet(alpha, &mut rng));
    }
    let (graph, _) = simulate_with_tally(&memberships, blockmatrix, seed)?;
    Ok((graph, memberships))
}

/// Links for fixed memberships: for every ordered pair i ≠ j draw sender
/// and receiver indicators, then a Bernoulli on the selected block entry.
pub fn simulate_from_memberships(
    memberships: &Matrix,
    blockmatrix: &Matrix,
    seed: u64,
) -> Result<DirectedGraph> {
    simulate_with_tally(memberships, blockmatrix, seed).map(|(g, _)| g)
}

/// As [`simulate_from_memberships`], also returning indicator-block tallies.
pub fn simulate_with_tally(
    memberships: &Matrix,
    blockmatrix: &Matrix,
    seed: u64,
) -> Result<(DirectedGraph, BlockTally)> {
    validate_blockmatrix(blockmatrix)?;
    let d = blockmatrix.rows();
    if memberships.cols() != d {
        return Err(Error::DimensionMismatch(format!(
            "memberships have {} columns, blockmatrix is {d}x{d}",
            memberships.cols()
        )));
    }
    let n = memberships.rows();
    let cdfs: Vec<Vec<f64>> = memberships
        .iter_rows()
        .map(|row| {
            let mut acc = 0.0;
            row.iter()
                .map(|&p| {
                    acc += p;
                    acc
                })
                .collect()
        })
        .collect();
    let rows = exec::map_range(n, |i| {
        let mut rng = rng::stream(seed, &[rng::STREAM_EDGES, i as u64]);
        let mut tally = BlockTally::new(d);
        let mut targets = Vec::new();
        let total_i = cdfs[i][d - 1];
        for (j, cdf_j) in cdfs.iter().enumerate() {
            if j == i {
                continue;
            }
            let s = categorical(&cdfs[i], rng.random::<f64>() * total_i);
            let r = categorical(cdf_j, rng.random::<f64>() * cdf_j[d - 1]);
            tally.pairs[s * d + r] += 1;
            if rng.random::<f64>() < blockmatrix[(s, r)] {
                tally.edges[s * d + r] += 1;
                targets.push(j);
            }
        }
        (targets, tally)
    });
    let mut edges = Vec::new();
    let mut tally = BlockTally::new(d);
    for (i, (targets, t)) in rows.into_iter().enumerate() {
        edges.extend(targets.into_iter().map(|j| (i, j)));
        tally.merge(&t);
    }
    Ok((DirectedGraph::from_sorted(n, edges), tally))
}

/// Planted subpopulations: centers and members with their labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Subpopulations {
    pub centers: Matrix,
    pub memberships: Matrix,
    pub assignment: Vec<usize>,
}

/// Centers η_k ~ Dirichlet(centers_alpha); each of `members_per_subpop`
/// members per subpopulation draws π ~ Dirichlet(member_concentration · η_k).
/// Members are laid out subpopulation by subpopulation.
pub fn generate_subpopulations(
    num_subpops: usize,
    centers_alpha: &[f64],
    member_concentration: f64,
    members_per_subpop: usize,
    seed: u64,
) -> Result<Subpopulations> {
    if num_subpops == 0 {
        return Err(Error::InvalidParameter("need at least one subpopulation".into()));
    }
    if !(member_concentration > 0.0 && member_concentration.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "member concentration {member_concentration} is not positive"
        )));
    }
    validate_positive("centers_alpha", centers_alpha)?;
    let d = centers_alpha.len();
    let mut centers = Matrix::zeros(num_subpops, d);
    let mut rng = rng::stream(seed, &[rng::STREAM_CENTERS]);
    for k in 0..num_subpops {
        centers.row_mut(k).copy_from_slice(&sample_dirichlet(centers_alpha, &mut rng));
    }
    let n = num_subpops * members_per_subpop;
    let mut memberships = Matrix::zeros(n, d);
    let mut assignment = Vec::with_capacity(n);
    let mut rng = rng::stream(seed, &[rng::STREAM_MEMBERSHIPS]);
    for k in 0..num_subpops {
        let shape: Vec<f64> = centers.row(k).iter().map(|&c| member_concentration * c).collect();
        for _ in 0..members_per_subpop {
            let i = assignment.len();
            memberships.row_mut(i).copy_from_slice(&sample_dirichlet(&shape, &mut rng));
            assignment.push(k);
        }
    }
    Ok(Subpopulations {
        centers,
        memberships,
        assignment,
    })
}

/// D×D matrix with the given diagonal and a constant off-diagonal value.
pub fn diagonal_blockmatrix(diagonal: &[f64], off_diagonal: f64) -> Matrix {
    let d = diagonal.len();
    let mut b = Matrix::filled(d, d, off_diagonal);
    for (m, &v) in diagonal.iter().enumerate() {
        b[(m, m)] = v;
    }
    b
}

/// Simulation design with planted subpopulations.
#[derive(Clone, Debug, PartialEq)]
pub struct SubpopulationDesign {
    pub num_subpops: usize,
    pub members_per_subpop: usize,
    pub member_concentration: f64,
    pub centers_alpha: Vec<f64>,
    pub blockmatrix: Matrix,
}

impl SubpopulationDesign {
    /// Six communities, three with within-link probability 0.1 and three
    /// with 0.04, scaled down to `num_subpops · members_per_subpop` nodes.
    pub fn six_community(num_subpops: usize, members_per_subpop: usize) -> Self {
        SubpopulationDesign {
            num_subpops,
            members_per_subpop,
            member_concentration: 50.0,
            centers_alpha: vec![0.1; 6],
            blockmatrix: diagonal_blockmatrix(&[0.1, 0.1, 0.1, 0.04, 0.04, 0.04], 0.005),
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.num_subpops * self.members_per_subpop
    }

    pub fn simulate(&self, seed: u64) -> Result<(DirectedGraph, GroundTruth)> {
        if self.centers_alpha.len() != self.blockmatrix.rows() {
            return Err(Error::DimensionMismatch(format!(
                "centers_alpha has {} entries for {} communities",
                self.centers_alpha.len(),
                self.blockmatrix.rows()
            )));
        }
        let subpops = generate_subpopulations(
            self.num_subpops,
            &self.centers_alpha,
            self.member_concentration,
            self.members_per_subpop,
            seed,
        )?;
        let graph = simulate_from_memberships(
            &subpops.memberships,
            &self.blockmatrix,
            rng::derive_seed(seed, &[rng::STREAM_GRAPH]),
        )?;
        let truth = GroundTruth {
            memberships: subpops.memberships,
            blockmatrix: self.blockmatrix.clone(),
            subpop_centers: subpops.centers,
            subpop_assignment: subpops.assignment,
        };
        Ok((graph, truth))
    }
}
