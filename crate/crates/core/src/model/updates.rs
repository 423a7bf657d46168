//! State-level gradients, NCVMP proposals and blockmatrix updates.

use super::dirichlet::{block_gradient, block_proposal, BlockStats};
use super::{AuxiliaryTable, Priors, VariationalState, BLOCK_EPS};
use crate::error::{Error, Result};
use crate::graph::ArdMatrix;
use crate::matrix::Matrix;

fn checked(
    state: &VariationalState,
    aux: &AuxiliaryTable,
    ard: &ArdMatrix,
    priors: Option<&Priors>,
) -> Result<usize> {
    state.validate()?;
    state.check_against(ard)?;
    let d = state.num_communities();
    aux.check_against(ard, d)?;
    if let Some(p) = priors {
        if p.dim() != d {
            return Err(Error::DimensionMismatch(format!(
                "priors are {}-dimensional, state has D = {d}",
                p.dim()
            )));
        }
    }
    Ok(d)
}

/// Node rate weights r = B w with w = Σ_k N_k E[η_k]; shared by every node.
pub fn node_rate(state: &VariationalState, ard: &ArdMatrix) -> Vec<f64> {
    let d = state.num_communities();
    let mut w = vec![0.0; d];
    for (k, &nk) in ard.subpop_sizes().iter().enumerate() {
        let row = state.phi.row(k);
        let total: f64 = row.iter().sum();
        for n in 0..d {
            w[n] += nk as f64 * row[n] / total;
        }
    }
    let b = &state.blockmatrix;
    (0..d)
        .map(|m| (0..d).map(|n| b[(m, n)] * w[n]).sum())
        .collect()
}

/// Bᵀ v with v = Σ_i E[π_i]; subpopulation k's rate weights are N_k Bᵀ v.
pub fn subpop_rate(state: &VariationalState) -> Vec<f64> {
    let d = state.num_communities();
    let mut v = vec![0.0; d];
    for row in state.gamma.iter_rows() {
        let total: f64 = row.iter().sum();
        for m in 0..d {
            v[m] += row[m] / total;
        }
    }
    let b = &state.blockmatrix;
    (0..d)
        .map(|n| (0..d).map(|m| v[m] * b[(m, n)]).sum())
        .collect()
}

pub fn node_stats(aux: &AuxiliaryTable, ard: &ArdMatrix, i: usize, rate: &[f64]) -> BlockStats {
    let d = aux.dim();
    let mut weights = vec![0.0; d];
    let mut total = 0.0;
    for e in ard.row_range(i) {
        let y = ard.entries()[e].count as f64;
        total += y;
        let p = aux.table(e);
        for m in 0..d {
            weights[m] += y * p[m * d..(m + 1) * d].iter().sum::<f64>();
        }
    }
    BlockStats {
        weights,
        total,
        rate: rate.to_vec(),
    }
}

pub fn subpop_stats(aux: &AuxiliaryTable, ard: &ArdMatrix, k: usize, rate_base: &[f64]) -> BlockStats {
    let d = aux.dim();
    let mut weights = vec![0.0; d];
    let mut total = 0.0;
    for &e in ard.col_entry_indices(k) {
        let y = ard.entries()[e].count as f64;
        total += y;
        let p = aux.table(e);
        for m in 0..d {
            for n in 0..d {
                weights[n] += y * p[m * d + n];
            }
        }
    }
    let nk = ard.subpop_sizes()[k] as f64;
    BlockStats {
        weights,
        total,
        rate: rate_base.iter().map(|r| nk * r).collect(),
    }
}

/// ∂ E_q log p(y, Θ) / ∂ γ_i with the auxiliary tables held fixed.
pub fn grad_gamma(
    state: &VariationalState,
    aux: &AuxiliaryTable,
    ard: &ArdMatrix,
    priors: &Priors,
    i: usize,
) -> Result<Vec<f64>> {
    checked(state, aux, ard, Some(priors))?;
    if i >= state.num_nodes() {
        return Err(Error::DimensionMismatch(format!("node {i} out of range")));
    }
    let stats = node_stats(aux, ard, i, &node_rate(state, ard));
    Ok(block_gradient(state.gamma.row(i), &stats, &priors.alpha))
}

/// ∂ E_q log p(y, Θ) / ∂ φ_k with the auxiliary tables held fixed.
pub fn grad_phi(
    state: &VariationalState,
    aux: &AuxiliaryTable,
    ard: &ArdMatrix,
    priors: &Priors,
    k: usize,
) -> Result<Vec<f64>> {
    checked(state, aux, ard, Some(priors))?;
    if k >= state.num_subpops() {
        return Err(Error::DimensionMismatch(format!("subpopulation {k} out of range")));
    }
    let stats = subpop_stats(aux, ard, k, &subpop_rate(state));
    Ok(block_gradient(state.phi.row(k), &stats, &priors.alpha))
}

/// γ̂_i = 1 + I⁻¹_{γ_i} ∇_{γ_i} E_q log p(y, Θ).
pub fn ncvmp_proposal_gamma(
    state: &VariationalState,
    aux: &AuxiliaryTable,
    ard: &ArdMatrix,
    priors: &Priors,
    i: usize,
) -> Result<Vec<f64>> {
    checked(state, aux, ard, Some(priors))?;
    if i >= state.num_nodes() {
        return Err(Error::DimensionMismatch(format!("node {i} out of range")));
    }
    let stats = node_stats(aux, ard, i, &node_rate(state, ard));
    block_proposal(state.gamma.row(i), &stats, &priors.alpha)
}

/// φ̂_k = 1 + I⁻¹_{φ_k} ∇_{φ_k} E_q log p(y, Θ).
pub fn ncvmp_proposal_phi(
    state: &VariationalState,
    aux: &AuxiliaryTable,
    ard: &ArdMatrix,
    priors: &Priors,
    k: usize,
) -> Result<Vec<f64>> {
    checked(state, aux, ard, Some(priors))?;
    if k >= state.num_subpops() {
        return Err(Error::DimensionMismatch(format!("subpopulation {k} out of range")));
    }
    let stats = subpop_stats(aux, ard, k, &subpop_rate(state));
    block_proposal(state.phi.row(k), &stats, &priors.alpha)
}

/// Blockmatrix sufficient statistics: `links[(m,n)] = Σ y p^(mn)` and
/// `exposure[(m,n)] = Σ_{ik} N_k E π_i^m E η_k^n`.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockSums {
    pub links: Matrix,
    pub exposure: Matrix,
}

impl BlockSums {
    /// L* as a function of one entry B_mn, up to terms not involving B.
    pub fn entry_objective(&self, priors: &Priors, m: usize, n: usize, b: f64) -> f64 {
        let a = priors.beta_a[(m, n)];
        let bb = priors.beta_b[(m, n)];
        (self.links[(m, n)] + a - 1.0) * b.ln() + (bb - 1.0) * (1.0 - b).ln()
            - self.exposure[(m, n)] * b
    }

    pub fn entry_gradient(&self, priors: &Priors, m: usize, n: usize, b: f64) -> f64 {
        let a = priors.beta_a[(m, n)];
        let bb = priors.beta_b[(m, n)];
        (self.links[(m, n)] + a - 1.0) / b + (1.0 - bb) / (1.0 - b) - self.exposure[(m, n)]
    }
}

pub fn block_sums(state: &VariationalState, aux: &AuxiliaryTable, ard: &ArdMatrix) -> BlockSums {
    let d = state.num_communities();
    let mut links = Matrix::zeros(d, d);
    for (e, entry) in ard.entries().iter().enumerate() {
        let y = entry.count as f64;
        for (l, p) in links.as_mut_slice().iter_mut().zip(aux.table(e)) {
            *l += y * p;
        }
    }
    let mut v = vec![0.0; d];
    for row in state.gamma.iter_rows() {
        let total: f64 = row.iter().sum();
        v.iter_mut().zip(row).for_each(|(a, x)| *a += x / total);
    }
    let mut w = vec![0.0; d];
    for (k, row) in state.phi.iter_rows().enumerate() {
        let total: f64 = row.iter().sum();
        let nk = ard.subpop_sizes()[k] as f64;
        w.iter_mut().zip(row).for_each(|(a, x)| *a += nk * x / total);
    }
    let mut exposure = Matrix::zeros(d, d);
    for m in 0..d {
        for n in 0..d {
            exposure[(m, n)] = v[m] * w[n];
        }
    }
    BlockSums { links, exposure }
}

/// Maximizer of L* in B under Beta(1, 1): links / exposure, clamped to
/// [ε, 1 − ε].
pub fn blockmatrix_closed_form(
    state: &VariationalState,
    aux: &AuxiliaryTable,
    ard: &ArdMatrix,
) -> Result<Matrix> {
    let d = checked(state, aux, ard, None)?;
    let sums = block_sums(state, aux, ard);
    let mut out = Matrix::zeros(d, d);
    for m in 0..d {
        for n in 0..d {
            let t = sums.exposure[(m, n)];
            if !(t > 0.0) {
                return Err(Error::Data(format!(
                    "zero exposure for block ({m}, {n}); the data has no rows or columns"
                )));
            }
            out[(m, n)] = (sums.links[(m, n)] / t).clamp(BLOCK_EPS, 1.0 - BLOCK_EPS);
        }
    }
    Ok(out)
}

/// ∂L*/∂B under general Beta(a, b) priors.
pub fn blockmatrix_gradient(
    state: &VariationalState,
    aux: &AuxiliaryTable,
    ard: &ArdMatrix,
    priors: &Priors,
) -> Result<Matrix> {
    let d = checked(state, aux, ard, Some(priors))?;
    let sums = block_sums(state, aux, ard);
    let mut grad = Matrix::zeros(d, d);
    for m in 0..d {
        for n in 0..d {
            grad[(m, n)] = sums.entry_gradient(priors, m, n, state.blockmatrix[(m, n)]);
        }
    }
    Ok(grad)
}
