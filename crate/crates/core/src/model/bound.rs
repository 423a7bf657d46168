use super::{AuxiliaryTable, Priors, VariationalState};
use crate::error::{Error, Result};
use crate::exec;
use crate::graph::ArdMatrix;
use crate::matrix::Matrix;
use crate::special::{dirichlet_entropy, dirichlet_expected_log};

/// Poisson rate N_k π^T B η.
pub fn poisson_rate(pi: &[f64], eta: &[f64], blockmatrix: &Matrix, subpop_size: u64) -> Result<f64> {
    let d = blockmatrix.rows();
    if pi.len() != d || eta.len() != d || blockmatrix.cols() != d {
        return Err(Error::DimensionMismatch(format!(
            "pi has {}, eta {} entries for a {}x{} blockmatrix",
            pi.len(),
            eta.len(),
            blockmatrix.rows(),
            blockmatrix.cols()
        )));
    }
    Ok(subpop_size as f64 * blockmatrix.bilinear(pi, eta))
}

fn expected_logs(params: &Matrix) -> Matrix {
    let d = params.cols();
    let rows = exec::map_range(params.rows(), |i| dirichlet_expected_log(params.row(i)));
    Matrix::from_vec(params.rows(), d, rows.concat()).expect("row lengths equal D")
}

/// p_ik^(mn) ∝ exp(E log π_i^m + log B_mn + E log η_k^n) for every nonzero cell.
pub fn update_auxiliary(state: &VariationalState, ard: &ArdMatrix) -> Result<AuxiliaryTable> {
    state.check_against(ard)?;
    let d = state.num_communities();
    let cells = d * d;
    let elog_gamma = expected_logs(&state.gamma);
    let elog_phi = expected_logs(&state.phi);
    let log_b: Vec<f64> = state.blockmatrix.as_slice().iter().map(|b| b.ln()).collect();
    let entries = ard.entries();
    let mut values = vec![0.0; entries.len() * cells];
    const CHUNK: usize = 512;
    exec::for_each_chunk(&mut values, CHUNK * cells, |c, out| {
        for (j, table) in out.chunks_mut(cells).enumerate() {
            let e = &entries[c * CHUNK + j];
            let lg = elog_gamma.row(e.row);
            let lp = elog_phi.row(e.col);
            let mut max = f64::NEG_INFINITY;
            for m in 0..d {
                for n in 0..d {
                    let v = lg[m] + log_b[m * d + n] + lp[n];
                    table[m * d + n] = v;
                    max = max.max(v);
                }
            }
            let mut total = 0.0;
            for v in table.iter_mut() {
                *v = (*v - max).exp();
                total += *v;
            }
            table.iter_mut().for_each(|v| *v /= total);
        }
    });
    AuxiliaryTable::from_values(d, values)
}

/// L* broken into its additive pieces.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LstarTerms {
    /// Σ y p [E log π + log B + E log η] − Σ y p log p + Σ y log N_k.
    pub likelihood: f64,
    /// −Σ_{ik} N_k E π_i^T B E η_k over all cells, zeros included.
    pub rate: f64,
    pub node_prior: f64,
    pub subpop_prior: f64,
    pub node_entropy: f64,
    pub subpop_entropy: f64,
    pub block_prior: f64,
}

impl LstarTerms {
    pub fn total(&self) -> f64 {
        self.likelihood
            + self.rate
            + self.node_prior
            + self.subpop_prior
            + self.node_entropy
            + self.subpop_entropy
            + self.block_prior
    }

    fn check_finite(&self) -> Result<()> {
        let named = [
            ("likelihood bound", self.likelihood),
            ("rate", self.rate),
            ("node Dirichlet prior", self.node_prior),
            ("subpopulation Dirichlet prior", self.subpop_prior),
            ("node Dirichlet entropy", self.node_entropy),
            ("subpopulation Dirichlet entropy", self.subpop_entropy),
            ("blockmatrix Beta prior", self.block_prior),
        ];
        match named.iter().find(|(_, v)| !v.is_finite()) {
            Some((term, _)) => Err(Error::NonFinite {
                term: (*term).to_string(),
            }),
            None => Ok(()),
        }
    }
}

fn dirichlet_block_terms(params: &Matrix, elog: &Matrix, alpha: &[f64]) -> (f64, f64) {
    let per_row = exec::map_range(params.rows(), |i| {
        let prior: f64 = elog.row(i).iter().zip(alpha).map(|(l, a)| (a - 1.0) * l).sum();
        (prior, dirichlet_entropy(params.row(i)))
    });
    per_row
        .into_iter()
        .fold((0.0, 0.0), |(p, h), (a, b)| (p + a, h + b))
}

pub fn lstar_terms(
    state: &VariationalState,
    aux: &AuxiliaryTable,
    ard: &ArdMatrix,
    priors: &Priors,
) -> Result<LstarTerms> {
    lstar_terms_inner(state, aux, ard, priors, None)
}

/// −Σ y p log p over every table; constant while the tables are fixed.
pub(crate) fn auxiliary_entropy(aux: &AuxiliaryTable, ard: &ArdMatrix) -> f64 {
    let per_entry = exec::map_range(ard.nnz(), |e| {
        let h: f64 = aux.table(e).iter().filter(|&&q| q > 0.0).map(|q| q * q.ln()).sum();
        -(ard.entries()[e].count as f64) * h
    });
    per_entry.iter().sum()
}

/// L* reusing a precomputed [`auxiliary_entropy`] for `aux`.
pub(crate) fn elbo_lstar_with_aux_entropy(
    state: &VariationalState,
    aux: &AuxiliaryTable,
    ard: &ArdMatrix,
    priors: &Priors,
    aux_entropy: f64,
) -> Result<f64> {
    lstar_terms_inner(state, aux, ard, priors, Some(aux_entropy)).map(|t| t.total())
}

fn lstar_terms_inner(
    state: &VariationalState,
    aux: &AuxiliaryTable,
    ard: &ArdMatrix,
    priors: &Priors,
    aux_entropy: Option<f64>,
) -> Result<LstarTerms> {
    state.check_against(ard)?;
    let d = state.num_communities();
    aux.check_against(ard, d)?;
    if priors.dim() != d {
        return Err(Error::DimensionMismatch(format!(
            "priors are {}-dimensional, state has D = {d}",
            priors.dim()
        )));
    }
    let elog_gamma = expected_logs(&state.gamma);
    let elog_phi = expected_logs(&state.phi);
    let b = &state.blockmatrix;
    let log_b: Vec<f64> = b.as_slice().iter().map(|v| v.ln()).collect();
    let sizes = ard.subpop_sizes();

    let per_entry = exec::map_range(ard.nnz(), |e| {
        let entry = &ard.entries()[e];
        let y = entry.count as f64;
        let p = aux.table(e);
        let lg = elog_gamma.row(entry.row);
        let lp = elog_phi.row(entry.col);
        let mut acc = 0.0;
        for m in 0..d {
            for n in 0..d {
                let q = p[m * d + n];
                if q > 0.0 {
                    let entropy = if aux_entropy.is_some() { 0.0 } else { q.ln() };
                    acc += q * (lg[m] + log_b[m * d + n] + lp[n] - entropy);
                }
            }
        }
        y * (acc + (sizes[entry.col] as f64).ln())
    });
    let likelihood = per_entry.iter().sum::<f64>() + aux_entropy.unwrap_or(0.0);

    let gamma_means = state.node_memberships();
    let phi_means = state.subpop_memberships();
    let mut v = vec![0.0; d];
    for row in gamma_means.iter_rows() {
        v.iter_mut().zip(row).for_each(|(a, x)| *a += x);
    }
    let mut w = vec![0.0; d];
    for (k, row) in phi_means.iter_rows().enumerate() {
        let nk = sizes[k] as f64;
        w.iter_mut().zip(row).for_each(|(a, x)| *a += nk * x);
    }
    let rate = -b.bilinear(&v, &w);

    let (node_prior, node_entropy) = dirichlet_block_terms(&state.gamma, &elog_gamma, &priors.alpha);
    let (subpop_prior, subpop_entropy) = dirichlet_block_terms(&state.phi, &elog_phi, &priors.alpha);

    let block_prior = b
        .as_slice()
        .iter()
        .zip(priors.beta_a.as_slice().iter().zip(priors.beta_b.as_slice()))
        .map(|(&bmn, (&a, &bb))| (a - 1.0) * bmn.ln() + (bb - 1.0) * (1.0 - bmn).ln())
        .sum();

    let terms = LstarTerms {
        likelihood,
        rate,
        node_prior,
        subpop_prior,
        node_entropy,
        subpop_entropy,
        block_prior,
    };
    terms.check_finite()?;
    Ok(terms)
}

/// The auxiliary-variable lower bound L*.
pub fn elbo_lstar(
    state: &VariationalState,
    aux: &AuxiliaryTable,
    ard: &ArdMatrix,
    priors: &Priors,
) -> Result<f64> {
    lstar_terms(state, aux, ard, priors).map(|t| t.total())
}

/// L* without the Dirichlet entropies of q: the bound on E_q log p(y, Θ)
/// whose γ/φ gradients drive the NCVMP updates.
pub fn expected_log_joint(
    state: &VariationalState,
    aux: &AuxiliaryTable,
    ard: &ArdMatrix,
    priors: &Priors,
) -> Result<f64> {
    lstar_terms(state, aux, ard, priors).map(|t| t.total() - t.node_entropy - t.subpop_entropy)
}
