//! Coordinate ascent on one minibatch: B, every γ_i, p, every φ_k, p.

use super::FitConfig;
use crate::error::{Error, Result};
use crate::exec;
use crate::graph::ArdMatrix;
use crate::model::bound::{auxiliary_entropy, elbo_lstar_with_aux_entropy};
use crate::model::{
    block_objective, block_proposal, block_sums, elbo_lstar, node_rate, node_stats, subpop_rate,
    subpop_stats, update_auxiliary, AuxiliaryTable, BlockStats, Priors, VariationalState,
    BLOCK_EPS,
};

/// Interpolated parameters must stay above this to count as positive.
pub const MIN_DIRICHLET_PARAM: f64 = 1e-10;

/// Base step for blockmatrix gradient moves, scaled by B(1 − B).
const BLOCK_GRADIENT_STEP: f64 = 1e-3;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct MinibatchFit {
    /// L* at the start and after every cycle that moved the state.
    pub trajectory: Vec<f64>,
    /// L* after every accepted move; filled only with `audit_steps`.
    pub step_trace: Vec<f64>,
    pub accepted: usize,
    pub rejected: usize,
    pub iterations: usize,
    pub converged: bool,
}

/// `(1 − s) current + s proposal`, halving s first until every entry is
/// positive and then until the objective strictly increases. `None` once s
/// drops below `floor`.
fn interpolate_step<F>(
    current: &[f64],
    proposal: &[f64],
    f_current: f64,
    floor: f64,
    objective: F,
) -> Option<(Vec<f64>, f64)>
where
    F: Fn(&[f64]) -> f64,
{
    if proposal.iter().any(|p| !p.is_finite()) {
        return None;
    }
    let blend = |s: f64| -> Vec<f64> {
        current
            .iter()
            .zip(proposal)
            .map(|(&c, &p)| (1.0 - s) * c + s * p)
            .collect()
    };
    let mut s = 1.0;
    let mut candidate = blend(s);
    while candidate.iter().any(|&x| !(x > MIN_DIRICHLET_PARAM)) {
        s *= 0.5;
        if s < floor {
            return None;
        }
        candidate = blend(s);
    }
    loop {
        let value = objective(&candidate);
        if value > f_current && value.is_finite() {
            return Some((candidate, value));
        }
        s *= 0.5;
        if s < floor {
            return None;
        }
        candidate = blend(s);
    }
}

/// Outcome of one block proposal: the accepted parameters, if any.
type Move = Option<Vec<f64>>;

fn propose(g: &[f64], stats: &BlockStats, alpha: &[f64], floor: f64) -> Result<Move> {
    let f0 = block_objective(g, stats, alpha);
    let proposal = block_proposal(g, stats, alpha)?;
    Ok(interpolate_step(g, &proposal, f0, floor, |c| block_objective(c, stats, alpha)).map(|(c, _)| c))
}

/// Returns true when at least one entry moved.
fn update_blockmatrix(
    state: &mut VariationalState,
    aux: &AuxiliaryTable,
    ard: &ArdMatrix,
    priors: &Priors,
    floor: f64,
) -> bool {
    let d = state.num_communities();
    let sums = block_sums(state, aux, ard);
    let closed_form = priors.is_uniform_beta();
    let mut moved = false;
    for m in 0..d {
        for n in 0..d {
            let current = state.blockmatrix[(m, n)];
            let f0 = sums.entry_objective(priors, m, n, current);
            let next = if closed_form {
                let t = sums.exposure[(m, n)];
                if !(t > 0.0) {
                    continue;
                }
                let b = (sums.links[(m, n)] / t).clamp(BLOCK_EPS, 1.0 - BLOCK_EPS);
                (sums.entry_objective(priors, m, n, b) > f0).then_some(b)
            } else {
                let step = BLOCK_GRADIENT_STEP
                    * current
                    * (1.0 - current)
                    * sums.entry_gradient(priors, m, n, current);
                let mut s = 1.0;
                loop {
                    let b = (current + s * step).clamp(BLOCK_EPS, 1.0 - BLOCK_EPS);
                    if b != current && sums.entry_objective(priors, m, n, b) > f0 {
                        break Some(b);
                    }
                    s *= 0.5;
                    if s < floor {
                        break None;
                    }
                }
            };
            if let Some(b) = next {
                state.blockmatrix[(m, n)] = b;
                moved = true;
            }
        }
    }
    moved
}

struct Audit<'a> {
    enabled: bool,
    ard: &'a ArdMatrix,
    priors: &'a Priors,
    /// Entropy of the current auxiliary tables.
    aux_entropy: f64,
}

impl Audit<'_> {
    fn refresh(&mut self, aux: &AuxiliaryTable) {
        if self.enabled {
            self.aux_entropy = auxiliary_entropy(aux, self.ard);
        }
    }

    fn record(&self, fit: &mut MinibatchFit, state: &VariationalState, aux: &AuxiliaryTable) -> Result<()> {
        if self.enabled {
            let value = elbo_lstar_with_aux_entropy(state, aux, self.ard, self.priors, self.aux_entropy)?;
            fit.step_trace.push(value);
        }
        Ok(())
    }
}

/// Fit `state` to `ard` in place by coordinate ascent on L*.
///
/// Each cycle updates B, proposes an NCVMP step for every γ_i, refreshes
/// the auxiliary tables, does the same for every φ_k, refreshes again and
/// then compares L* against the previous cycle. A proposal is interpolated
/// with the current value and accepted only if L* strictly increases.
pub fn fit_minibatch(
    state: &mut VariationalState,
    ard: &ArdMatrix,
    config: &FitConfig,
) -> Result<MinibatchFit> {
    state.validate()?;
    state.check_against(ard)?;
    let priors = &config.priors;
    let alpha = &priors.alpha;
    let floor = config.step_halving_floor;
    let d = state.num_communities();
    let mut audit = Audit {
        enabled: config.audit_steps,
        ard,
        priors,
        aux_entropy: 0.0,
    };

    let mut fit = MinibatchFit::default();
    let mut aux = update_auxiliary(state, ard)?;
    audit.refresh(&aux);
    let mut current = elbo_lstar(state, &aux, ard, priors)?;
    fit.trajectory.push(current);
    audit.record(&mut fit, state, &aux)?;

    for _ in 0..config.max_inner_iters {
        fit.iterations += 1;
        let mut moved = 0usize;

        if update_blockmatrix(state, &aux, ard, priors, floor) {
            moved += 1;
            fit.accepted += 1;
            audit.record(&mut fit, state, &aux)?;
        } else {
            fit.rejected += 1;
        }

        // a one-community Dirichlet is a point mass; γ and φ have nothing to fit
        if d > 1 {
            let rate = node_rate(state, ard);
            let moves = {
                let snapshot: &VariationalState = state;
                exec::map_range(snapshot.num_nodes(), |i| {
                    let stats = node_stats(&aux, ard, i, &rate);
                    propose(snapshot.gamma.row(i), &stats, alpha, floor)
                })
            };
            for (i, mv) in moves.into_iter().enumerate() {
                match mv? {
                    Some(g) => {
                        state.gamma.row_mut(i).copy_from_slice(&g);
                        moved += 1;
                        fit.accepted += 1;
                        audit.record(&mut fit, state, &aux)?;
                    }
                    None => fit.rejected += 1,
                }
            }
            aux = update_auxiliary(state, ard)?;
            audit.refresh(&aux);
            audit.record(&mut fit, state, &aux)?;

            let base = subpop_rate(state);
            let moves = {
                let snapshot: &VariationalState = state;
                exec::map_range(snapshot.num_subpops(), |k| {
                    let stats = subpop_stats(&aux, ard, k, &base);
                    propose(snapshot.phi.row(k), &stats, alpha, floor)
                })
            };
            for (k, mv) in moves.into_iter().enumerate() {
                match mv? {
                    Some(g) => {
                        state.phi.row_mut(k).copy_from_slice(&g);
                        moved += 1;
                        fit.accepted += 1;
                        audit.record(&mut fit, state, &aux)?;
                    }
                    None => fit.rejected += 1,
                }
            }
        }
        aux = update_auxiliary(state, ard)?;
        audit.refresh(&aux);
        audit.record(&mut fit, state, &aux)?;

        let next = elbo_lstar(state, &aux, ard, priors)?;
        if !next.is_finite() {
            return Err(Error::NonFinite {
                term: "lower bound".into(),
            });
        }
        if moved == 0 {
            fit.converged = true;
            break;
        }
        fit.trajectory.push(next);
        let delta = next - current;
        current = next;
        if delta.abs() < config.elbo_tol {
            fit.converged = true;
            break;
        }
    }
    Ok(fit)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolation_halves_for_positivity_then_increase() {
        // maximize -(x - 0.3)^2 starting at 1.0 with a proposal of -1.0
        let f = |x: &[f64]| -(x[0] - 0.3) * (x[0] - 0.3);
        let (x, v) = interpolate_step(&[1.0], &[-1.0], f(&[1.0]), 2f64.powi(-20), f).unwrap();
        assert!(x[0] > 0.0 && v > f(&[1.0]));
        // s = 1 and s = 1/2 give non-positive values, s = 1/4 gives 0.5
        assert!((x[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn interpolation_reverts_below_floor() {
        let f = |x: &[f64]| -x[0];
        assert!(interpolate_step(&[1.0], &[2.0], f(&[1.0]), 0.25, f).is_none());
        assert!(interpolate_step(&[1.0], &[f64::NAN], 0.0, 0.25, f).is_none());
    }
}
