//! Per-block kernels shared by node (γ_i) and subpopulation (φ_k) updates.
//!
//! With the auxiliary tables held fixed, L* restricted to one Dirichlet
//! block g is
//!
//!   f(g) = Σ_m (c_m + α_m − 1)(ψ(g_m) − ψ(G)) − (g·r)/G + H[Dir(g)]
//!
//! where G = Σ g, c_m = Σ y p over the block's nonzero cells (summed over the
//! partner index), and r is the block's Poisson-rate weight vector.

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::special::{digamma, dirichlet_entropy, trigamma};

/// Sufficient statistics of one Dirichlet block.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockStats {
    /// c_m: auxiliary-weighted link counts per community.
    pub weights: Vec<f64>,
    /// Σ_m c_m, the total link count of the block.
    pub total: f64,
    /// r_m: the rate term is −Σ_m g_m r_m / G.
    pub rate: Vec<f64>,
}

/// E_q log p restricted to one block (no entropy of q).
pub fn block_expected_log_joint(g: &[f64], stats: &BlockStats, alpha: &[f64]) -> f64 {
    let total: f64 = g.iter().sum();
    let psi_total = digamma(total);
    let mut value = 0.0;
    let mut rate = 0.0;
    for m in 0..g.len() {
        value += (stats.weights[m] + alpha[m] - 1.0) * (digamma(g[m]) - psi_total);
        rate += g[m] * stats.rate[m];
    }
    value - rate / total
}

/// The block's full contribution to L*.
pub fn block_objective(g: &[f64], stats: &BlockStats, alpha: &[f64]) -> f64 {
    block_expected_log_joint(g, stats, alpha) + dirichlet_entropy(g)
}

/// ∇_g E_q log p(y, Θ) for one block.
pub fn block_gradient(g: &[f64], stats: &BlockStats, alpha: &[f64]) -> Vec<f64> {
    let total: f64 = g.iter().sum();
    let tri_total = trigamma(total);
    let alpha_excess: f64 = alpha.iter().map(|a| a - 1.0).sum();
    let weighted_rate: f64 = g.iter().zip(&stats.rate).map(|(a, b)| a * b).sum();
    (0..g.len())
        .map(|m| {
            (stats.weights[m] + alpha[m] - 1.0) * trigamma(g[m])
                - (stats.total + alpha_excess) * tri_total
                - stats.rate[m] / total
                + weighted_rate / (total * total)
        })
        .collect()
}

/// Fisher information of Dirichlet(param): ψ′(param_m)[m = n] − ψ′(Σ param).
pub fn dirichlet_fisher(param: &[f64]) -> Matrix {
    let d = param.len();
    let tri_total = trigamma(param.iter().sum());
    let mut fisher = Matrix::filled(d, d, -tri_total);
    for (m, &g) in param.iter().enumerate() {
        fisher[(m, m)] += trigamma(g);
    }
    fisher
}

fn check_param(param: &[f64]) -> Result<()> {
    if param.is_empty() || param.iter().any(|&g| !(g > 0.0 && g.is_finite())) {
        return Err(Error::InvalidParameter(format!(
            "Dirichlet parameter {param:?} is not strictly positive"
        )));
    }
    Ok(())
}

/// Diagonal-plus-rank-one pieces of the inverse Fisher matrix:
/// I⁻¹ = diag(1/d) + κ (1/d)(1/d)ᵀ.
fn fisher_inverse_parts(param: &[f64]) -> Result<(Vec<f64>, f64)> {
    check_param(param)?;
    let tri_total = trigamma(param.iter().sum());
    let inv_diag: Vec<f64> = param.iter().map(|&g| 1.0 / trigamma(g)).collect();
    let denom = 1.0 - tri_total * inv_diag.iter().sum::<f64>();
    if !(denom > 1e-12) {
        return Err(Error::SingularFisher(param.to_vec()));
    }
    Ok((inv_diag, tri_total / denom))
}

/// I⁻¹ v without forming the matrix.
pub fn fisher_inverse_apply(param: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    let (inv_diag, kappa) = fisher_inverse_parts(param)?;
    let proj: f64 = v.iter().zip(&inv_diag).map(|(a, b)| a * b).sum();
    Ok(v.iter()
        .zip(&inv_diag)
        .map(|(&vm, &dm)| vm * dm + kappa * proj * dm)
        .collect())
}

pub fn dirichlet_fisher_inverse(param: &[f64]) -> Result<Matrix> {
    let (inv_diag, kappa) = fisher_inverse_parts(param)?;
    let d = param.len();
    let mut inv = Matrix::zeros(d, d);
    for m in 0..d {
        for n in 0..d {
            inv[(m, n)] = kappa * inv_diag[m] * inv_diag[n];
        }
        inv[(m, m)] += inv_diag[m];
    }
    Ok(inv)
}

/// NCVMP fixed-point proposal ĝ = 1 + I⁻¹ ∇ E_q log p. May be non-positive.
pub fn block_proposal(g: &[f64], stats: &BlockStats, alpha: &[f64]) -> Result<Vec<f64>> {
    let grad = block_gradient(g, stats, alpha);
    let step = fisher_inverse_apply(g, &grad)?;
    Ok(step.into_iter().map(|s| 1.0 + s).collect())
}
