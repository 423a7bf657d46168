//! The ARD mixed membership blockmodel: variational state, priors,
//! auxiliary tables, the lower bound L* and every single-block update.

pub(crate) mod bound;
mod dirichlet;
mod updates;

pub use bound::{elbo_lstar, expected_log_joint, lstar_terms, poisson_rate, update_auxiliary, LstarTerms};
pub use dirichlet::{
    block_expected_log_joint, block_gradient, block_objective, block_proposal, dirichlet_fisher,
    dirichlet_fisher_inverse, fisher_inverse_apply, BlockStats,
};
pub use updates::{
    block_sums, blockmatrix_closed_form, blockmatrix_gradient, grad_gamma, grad_phi,
    ncvmp_proposal_gamma, ncvmp_proposal_phi, node_rate, node_stats, subpop_rate, subpop_stats,
    BlockSums,
};

use crate::error::{Error, Result};
use crate::graph::ArdMatrix;
use crate::matrix::Matrix;

/// Lower/upper clamp for blockmatrix entries.
pub const BLOCK_EPS: f64 = 1e-8;

/// Dirichlet parameters for nodes (γ, N×D) and subpopulations (φ, K×D)
/// plus the point-mass blockmatrix B (D×D).
#[derive(Clone, Debug, PartialEq)]
pub struct VariationalState {
    pub gamma: Matrix,
    pub phi: Matrix,
    pub blockmatrix: Matrix,
}

impl VariationalState {
    pub fn new(gamma: Matrix, phi: Matrix, blockmatrix: Matrix) -> Result<Self> {
        let state = VariationalState {
            gamma,
            phi,
            blockmatrix,
        };
        state.validate()?;
        Ok(state)
    }

    pub fn num_communities(&self) -> usize {
        self.blockmatrix.rows()
    }

    pub fn num_nodes(&self) -> usize {
        self.gamma.rows()
    }

    pub fn num_subpops(&self) -> usize {
        self.phi.rows()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.blockmatrix.rows();
        if d == 0 || self.blockmatrix.cols() != d {
            return Err(Error::DimensionMismatch(format!(
                "blockmatrix is {}x{}",
                self.blockmatrix.rows(),
                self.blockmatrix.cols()
            )));
        }
        if self.gamma.cols() != d || self.phi.cols() != d {
            return Err(Error::DimensionMismatch(format!(
                "gamma has {} columns and phi {} for {d} communities",
                self.gamma.cols(),
                self.phi.cols()
            )));
        }
        if let Some(v) = self
            .gamma
            .as_slice()
            .iter()
            .chain(self.phi.as_slice())
            .find(|&&v| !(v > 0.0 && v.is_finite()))
        {
            return Err(Error::InvalidParameter(format!(
                "Dirichlet parameter {v} is not strictly positive"
            )));
        }
        if let Some(v) = self.blockmatrix.as_slice().iter().find(|&&v| !(v > 0.0 && v < 1.0)) {
            return Err(Error::InvalidParameter(format!("blockmatrix entry {v} outside (0, 1)")));
        }
        Ok(())
    }

    pub(crate) fn check_against(&self, ard: &ArdMatrix) -> Result<()> {
        if self.gamma.rows() != ard.num_nodes() || self.phi.rows() != ard.num_subpops() {
            return Err(Error::DimensionMismatch(format!(
                "state is {}x{} (nodes x subpops), data is {}x{}",
                self.gamma.rows(),
                self.phi.rows(),
                ard.num_nodes(),
                ard.num_subpops()
            )));
        }
        Ok(())
    }

    /// Dirichlet means of the node parameters.
    pub fn node_memberships(&self) -> Matrix {
        self.gamma.row_normalized()
    }

    /// Dirichlet means of the subpopulation parameters.
    pub fn subpop_memberships(&self) -> Matrix {
        self.phi.row_normalized()
    }

    /// Relabel only the subpopulation side: new φ column and B column `a`
    /// are old column `perm[a]`. Every rate N_k E[π_i]ᵀ B E[η_k] is unchanged.
    pub fn permute_subpop_side(&self, perm: &[usize]) -> VariationalState {
        VariationalState {
            gamma: self.gamma.clone(),
            phi: self.phi.permuted_cols(perm),
            blockmatrix: self.blockmatrix.permuted_cols(perm),
        }
    }

    /// Relabel communities: new community `a` is old community `perm[a]`.
    pub fn permute_communities(&self, perm: &[usize]) -> VariationalState {
        VariationalState {
            gamma: self.gamma.permuted_cols(perm),
            phi: self.phi.permuted_cols(perm),
            blockmatrix: self.blockmatrix.permuted(perm),
        }
    }
}

/// Dirichlet(α) prior on π_i and η_k, Beta(a_mn, b_mn) on B_mn.
#[derive(Clone, Debug, PartialEq)]
pub struct Priors {
    pub alpha: Vec<f64>,
    pub beta_a: Matrix,
    pub beta_b: Matrix,
}

impl Priors {
    /// α = 1 and Beta(1, 1).
    pub fn uniform(d: usize) -> Self {
        Priors {
            alpha: vec![1.0; d],
            beta_a: Matrix::filled(d, d, 1.0),
            beta_b: Matrix::filled(d, d, 1.0),
        }
    }

    pub fn new(alpha: Vec<f64>, beta_a: Matrix, beta_b: Matrix) -> Result<Self> {
        let p = Priors {
            alpha,
            beta_a,
            beta_b,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.alpha.len()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.alpha.len();
        for (name, m) in [("beta_a", &self.beta_a), ("beta_b", &self.beta_b)] {
            if m.rows() != d || m.cols() != d {
                return Err(Error::DimensionMismatch(format!(
                    "{name} is {}x{}, expected {d}x{d}",
                    m.rows(),
                    m.cols()
                )));
            }
        }
        if let Some(v) = self
            .alpha
            .iter()
            .chain(self.beta_a.as_slice())
            .chain(self.beta_b.as_slice())
            .find(|&&v| !(v > 0.0 && v.is_finite()))
        {
            return Err(Error::InvalidParameter(format!("prior parameter {v} is not positive")));
        }
        Ok(())
    }

    /// True when every blockmatrix prior is Beta(1, 1).
    pub fn is_uniform_beta(&self) -> bool {
        self.beta_a
            .as_slice()
            .iter()
            .chain(self.beta_b.as_slice())
            .all(|&v| v == 1.0)
    }
}

/// Auxiliary probability tables p_ik^(mn), one D×D table per nonzero ARD
/// entry, stored in the ARD entry order.
#[derive(Clone, Debug, PartialEq)]
pub struct AuxiliaryTable {
    dim: usize,
    values: Vec<f64>,
}

impl AuxiliaryTable {
    pub fn from_values(dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 || !values.len().is_multiple_of(dim * dim) {
            return Err(Error::DimensionMismatch(format!(
                "{} values do not form {dim}x{dim} tables",
                values.len()
            )));
        }
        Ok(AuxiliaryTable { dim, values })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.values.len() / (self.dim * self.dim)
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Number of stored probabilities.
    pub fn allocated_cells(&self) -> usize {
        self.values.len()
    }

    /// Row-major D×D table for ARD entry `e`.
    pub fn table(&self, e: usize) -> &[f64] {
        let s = self.dim * self.dim;
        &self.values[e * s..(e + 1) * s]
    }

    pub fn table_mut(&mut self, e: usize) -> &mut [f64] {
        let s = self.dim * self.dim;
        &mut self.values[e * s..(e + 1) * s]
    }

    /// `(row, col)` keys of the tables, i.e. the nonzero ARD cells.
    pub fn keys(&self, ard: &ArdMatrix) -> Vec<(usize, usize)> {
        ard.entries().iter().take(self.len()).map(|e| (e.row, e.col)).collect()
    }

    pub(crate) fn check_against(&self, ard: &ArdMatrix, d: usize) -> Result<()> {
        if self.dim != d || self.len() != ard.nnz() {
            return Err(Error::DimensionMismatch(format!(
                "auxiliary table holds {} {}x{} tables, data has {} nonzero cells and D = {d}",
                self.len(),
                self.dim,
                self.dim,
                ard.nnz()
            )));
        }
        Ok(())
    }

    /// Same tables with community labels permuted (see
    /// [`VariationalState::permute_communities`]).
    pub fn permute_communities(&self, perm: &[usize]) -> AuxiliaryTable {
        let d = self.dim;
        let mut out = self.clone();
        for e in 0..self.len() {
            let src = self.table(e);
            let dst = out.table_mut(e);
            for a in 0..d {
                for b in 0..d {
                    dst[a * d + b] = src[perm[a] * d + perm[b]];
                }
            }
        }
        out
    }
}
