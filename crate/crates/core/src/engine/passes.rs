//! Parallel minibatch passes with cross-minibatch averaging.

use std::time::{Duration, Instant};

use rand::seq::SliceRandom;

use super::init::svd_initialize_with;
use super::minibatch::{fit_minibatch, MinibatchFit};
use super::FitConfig;
use crate::error::{Error, Result};
use crate::eval::membership_kl;
use crate::exec;
use crate::graph::ArdMatrix;
use crate::matrix::Matrix;
use crate::model::VariationalState;
use crate::rng;

/// Disjoint node partitions, each paired with a subset of subpopulations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MinibatchPlan {
    pub node_partitions: Vec<Vec<usize>>,
    pub subpop_subsets: Vec<Vec<usize>>,
}

impl MinibatchPlan {
    /// Everything in one minibatch.
    pub fn single(num_nodes: usize, num_subpops: usize) -> Self {
        MinibatchPlan {
            node_partitions: vec![(0..num_nodes).collect()],
            subpop_subsets: vec![(0..num_subpops).collect()],
        }
    }

    /// Random partition into `ceil(N / minibatch_size)` near-equal parts.
    /// Node lists and subpopulation subsets are sorted. Subpopulations
    /// missed by every random subset are added round-robin.
    pub fn random(
        num_nodes: usize,
        num_subpops: usize,
        minibatch_size: usize,
        subpops_per_minibatch: Option<usize>,
        seed: u64,
        pass: usize,
    ) -> Result<Self> {
        if num_nodes == 0 || minibatch_size == 0 {
            return Err(Error::InvalidParameter(
                "need at least one node and a positive minibatch size".into(),
            ));
        }
        let mut order: Vec<usize> = (0..num_nodes).collect();
        order.shuffle(&mut rng::stream(seed, &[rng::STREAM_PARTITION, pass as u64]));
        let parts = num_nodes.div_ceil(minibatch_size);
        let mut node_partitions = Vec::with_capacity(parts);
        let mut start = 0;
        for b in 0..parts {
            let len = num_nodes / parts + usize::from(b < num_nodes % parts);
            let mut part = order[start..start + len].to_vec();
            part.sort_unstable();
            node_partitions.push(part);
            start += len;
        }
        let subpop_subsets = match subpops_per_minibatch {
            Some(s) if s < num_subpops => {
                let mut subsets: Vec<Vec<usize>> = (0..parts)
                    .map(|b| {
                        let mut r = rng::stream(seed, &[rng::STREAM_MINIBATCH, pass as u64, b as u64]);
                        rand::seq::index::sample(&mut r, num_subpops, s).into_vec()
                    })
                    .collect();
                let mut covered = vec![false; num_subpops];
                subsets.iter().flatten().for_each(|&k| covered[k] = true);
                let missing = (0..num_subpops).filter(|&k| !covered[k]);
                for (j, k) in missing.enumerate() {
                    subsets[j % parts].push(k);
                }
                subsets.iter_mut().for_each(|s| s.sort_unstable());
                subsets
            }
            _ => vec![(0..num_subpops).collect(); parts],
        };
        Ok(MinibatchPlan {
            node_partitions,
            subpop_subsets,
        })
    }

    pub fn len(&self) -> usize {
        self.node_partitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.node_partitions.is_empty()
    }

    pub fn validate(&self, num_nodes: usize, num_subpops: usize) -> Result<()> {
        if self.node_partitions.len() != self.subpop_subsets.len() || self.is_empty() {
            return Err(Error::InvalidParameter(
                "plan needs one subpopulation subset per node partition".into(),
            ));
        }
        let mut owner = vec![usize::MAX; num_nodes];
        for (b, part) in self.node_partitions.iter().enumerate() {
            if part.is_empty() {
                return Err(Error::InvalidParameter(format!("minibatch {b} has no nodes")));
            }
            for &i in part {
                if i >= num_nodes {
                    return Err(Error::InvalidParameter(format!("node {i} out of range")));
                }
                if owner[i] != usize::MAX {
                    return Err(Error::InvalidParameter(format!(
                        "node {i} appears in minibatches {} and {b}",
                        owner[i]
                    )));
                }
                owner[i] = b;
            }
        }
        if let Some(i) = owner.iter().position(|&o| o == usize::MAX) {
            return Err(Error::InvalidParameter(format!("node {i} is in no minibatch")));
        }
        let mut covered = vec![false; num_subpops];
        for (b, subset) in self.subpop_subsets.iter().enumerate() {
            if subset.is_empty() {
                return Err(Error::InvalidParameter(format!("minibatch {b} has no subpopulations")));
            }
            for &k in subset {
                if k >= num_subpops {
                    return Err(Error::InvalidParameter(format!("subpopulation {k} out of range")));
                }
                covered[k] = true;
            }
        }
        if let Some(k) = covered.iter().position(|&c| !c) {
            return Err(Error::InvalidParameter(format!(
                "subpopulation {k} is in no minibatch"
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MinibatchReport {
    pub index: usize,
    pub num_nodes: usize,
    pub num_subpops: usize,
    pub fit: MinibatchFit,
    pub elapsed: Duration,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PassReport {
    pub pass: usize,
    pub minibatches: Vec<MinibatchReport>,
    pub elapsed: Duration,
}

impl PassReport {
    pub fn accepted(&self) -> usize {
        self.minibatches.iter().map(|m| m.fit.accepted).sum()
    }

    pub fn rejected(&self) -> usize {
        self.minibatches.iter().map(|m| m.fit.rejected).sum()
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct FitReport {
    pub init_elapsed: Duration,
    pub init_fallback: bool,
    pub passes: Vec<PassReport>,
    /// `pass_kl[t][i]`: Dirichlet KL of node i between the state entering
    /// pass t and the state it produced (t = 0 compares against the
    /// initialization).
    pub pass_kl: Vec<Vec<f64>>,
}

fn slice_state(state: &VariationalState, rows: &[usize], cols: &[usize]) -> VariationalState {
    let d = state.num_communities();
    let mut gamma = Matrix::zeros(rows.len(), d);
    for (r, &i) in rows.iter().enumerate() {
        gamma.row_mut(r).copy_from_slice(state.gamma.row(i));
    }
    let mut phi = Matrix::zeros(cols.len(), d);
    for (c, &k) in cols.iter().enumerate() {
        phi.row_mut(c).copy_from_slice(state.phi.row(k));
    }
    VariationalState {
        gamma,
        phi,
        blockmatrix: state.blockmatrix.clone(),
    }
}

/// Fit every minibatch of `plan` from the shared state on a pool of
/// `parallelism` workers, then store γ rows per node and average φ_k over
/// the minibatches containing k and B over all minibatches.
pub fn run_pass(
    state: &VariationalState,
    ard: &ArdMatrix,
    plan: &MinibatchPlan,
    config: &FitConfig,
    parallelism: usize,
) -> Result<(VariationalState, PassReport)> {
    state.validate()?;
    state.check_against(ard)?;
    plan.validate(ard.num_nodes(), ard.num_subpops())?;
    let start = Instant::now();
    let indices: Vec<usize> = (0..plan.len()).collect();
    let results = exec::with_threads(parallelism, || {
        exec::map_collect(&indices, |&b| -> Result<(VariationalState, MinibatchReport)> {
            let t0 = Instant::now();
            let rows = &plan.node_partitions[b];
            let cols = &plan.subpop_subsets[b];
            let wrap = |e: Error| Error::MinibatchAborted {
                index: b,
                source: Box::new(e),
            };
            let local_ard = ard.restrict(rows, cols).map_err(wrap)?;
            let mut local = slice_state(state, rows, cols);
            let fit = fit_minibatch(&mut local, &local_ard, config).map_err(wrap)?;
            let report = MinibatchReport {
                index: b,
                num_nodes: rows.len(),
                num_subpops: cols.len(),
                fit,
                elapsed: t0.elapsed(),
            };
            Ok((local, report))
        })
    });

    let d = state.num_communities();
    let mut merged = state.clone();
    let mut phi_sum = Matrix::zeros(state.num_subpops(), d);
    let mut phi_count = vec![0usize; state.num_subpops()];
    let mut b_sum = Matrix::zeros(d, d);
    let mut reports = Vec::with_capacity(plan.len());
    for (b, result) in results.into_iter().enumerate() {
        let (local, report) = result?;
        for (r, &i) in plan.node_partitions[b].iter().enumerate() {
            merged.gamma.row_mut(i).copy_from_slice(local.gamma.row(r));
        }
        for (c, &k) in plan.subpop_subsets[b].iter().enumerate() {
            phi_count[k] += 1;
            for (acc, x) in phi_sum.row_mut(k).iter_mut().zip(local.phi.row(c)) {
                *acc += x;
            }
        }
        for (acc, x) in b_sum.as_mut_slice().iter_mut().zip(local.blockmatrix.as_slice()) {
            *acc += x;
        }
        reports.push(report);
    }
    for (k, &count) in phi_count.iter().enumerate() {
        let dst = merged.phi.row_mut(k);
        for (x, s) in dst.iter_mut().zip(phi_sum.row(k)) {
            *x = s / count as f64;
        }
    }
    let batches = plan.len() as f64;
    for (x, s) in merged.blockmatrix.as_mut_slice().iter_mut().zip(b_sum.as_slice()) {
        *x = s / batches;
    }
    Ok((
        merged,
        PassReport {
            pass: 0,
            minibatches: reports,
            elapsed: start.elapsed(),
        },
    ))
}

/// Run passes `first_pass .. first_pass + count` with fresh random
/// partitions keyed by `(seed, pass)`. `on_pass` sees each merged state,
/// e.g. to write a checkpoint.
pub fn run_passes<F>(
    mut state: VariationalState,
    ard: &ArdMatrix,
    config: &FitConfig,
    first_pass: usize,
    count: usize,
    mut on_pass: F,
) -> Result<(VariationalState, Vec<PassReport>, Vec<Vec<f64>>)>
where
    F: FnMut(usize, &VariationalState, &PassReport) -> Result<()>,
{
    config.validate()?;
    let mut reports = Vec::with_capacity(count);
    let mut kls = Vec::with_capacity(count);
    for pass in first_pass..first_pass + count {
        let plan = MinibatchPlan::random(
            ard.num_nodes(),
            ard.num_subpops(),
            config.minibatch_size,
            config.subpops_per_minibatch,
            config.seed,
            pass,
        )?;
        let (next, mut report) = run_pass(&state, ard, &plan, config, config.parallelism)?;
        report.pass = pass;
        kls.push(membership_kl(&state, &next)?);
        log::info!(
            "pass {pass}: {} minibatches, {} accepted / {} rejected moves, {:.2?}",
            plan.len(),
            report.accepted(),
            report.rejected(),
            report.elapsed
        );
        on_pass(pass, &next, &report)?;
        state = next;
        reports.push(report);
    }
    Ok((state, reports, kls))
}

/// SVD initialization followed by `config.num_passes` passes.
pub fn run_multipass(ard: &ArdMatrix, config: &FitConfig) -> Result<(VariationalState, FitReport)> {
    config.validate()?;
    let t0 = Instant::now();
    let init = svd_initialize_with(ard, config.num_communities, config.seed, &config.init)?;
    let init_elapsed = t0.elapsed();
    let (state, passes, pass_kl) =
        run_passes(init.state, ard, config, 0, config.num_passes, |_, _, _| Ok(()))?;
    Ok((
        state,
        FitReport {
            init_elapsed,
            init_fallback: init.used_fallback,
            passes,
            pass_kl,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_plan_is_a_partition() {
        let plan = MinibatchPlan::random(103, 7, 20, Some(2), 4, 1).unwrap();
        plan.validate(103, 7).unwrap();
        assert_eq!(plan.len(), 6);
        let sizes: Vec<usize> = plan.node_partitions.iter().map(Vec::len).collect();
        assert!(sizes.iter().all(|&s| s == 17 || s == 18));
    }

    #[test]
    fn plan_validation_catches_overlap_and_gaps() {
        let overlap = MinibatchPlan {
            node_partitions: vec![vec![0, 1], vec![1, 2]],
            subpop_subsets: vec![vec![0], vec![0]],
        };
        assert!(overlap.validate(3, 1).is_err());
        let gap = MinibatchPlan {
            node_partitions: vec![vec![0, 1]],
            subpop_subsets: vec![vec![0]],
        };
        assert!(gap.validate(3, 1).is_err());
        let uncovered = MinibatchPlan {
            node_partitions: vec![vec![0], vec![1]],
            subpop_subsets: vec![vec![0], vec![0]],
        };
        assert!(uncovered.validate(2, 2).is_err());
    }
}
