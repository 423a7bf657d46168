//! Minibatch coordinate ascent, parallel passes with cross-minibatch
//! averaging, and SVD-based initialization.

mod init;
mod minibatch;
mod passes;

pub use init::{soft_assignments, svd_initialize, svd_initialize_with, InitConfig, InitOutcome};
pub use minibatch::{fit_minibatch, MinibatchFit, MIN_DIRICHLET_PARAM};
pub use passes::{
    run_multipass, run_pass, run_passes, FitReport, MinibatchPlan, MinibatchReport, PassReport,
};

use crate::error::{Error, Result};
use crate::model::Priors;

#[derive(Clone, Debug, PartialEq)]
pub struct FitConfig {
    pub num_communities: usize,
    pub priors: Priors,
    /// Stop a minibatch once one full cycle changes L* by less than this.
    pub elbo_tol: f64,
    pub max_inner_iters: usize,
    /// Smallest interpolation step tried before a proposal is reverted.
    pub step_halving_floor: f64,
    pub num_passes: usize,
    /// Target number of nodes per minibatch.
    pub minibatch_size: usize,
    /// Subpopulations per minibatch; `None` uses all of them.
    pub subpops_per_minibatch: Option<usize>,
    pub seed: u64,
    /// Worker threads for minibatch execution; 0 uses the global pool.
    pub parallelism: usize,
    /// Record L* after every accepted move (expensive; for verification).
    pub audit_steps: bool,
    pub init: InitConfig,
}

impl FitConfig {
    pub fn new(num_communities: usize) -> Self {
        FitConfig {
            num_communities,
            priors: Priors::uniform(num_communities),
            elbo_tol: 1e-2,
            max_inner_iters: 1000,
            step_halving_floor: 2f64.powi(-20),
            num_passes: 2,
            minibatch_size: 2000,
            subpops_per_minibatch: None,
            seed: 0,
            parallelism: 0,
            audit_steps: false,
            init: InitConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_communities == 0 {
            return Err(Error::InvalidParameter("num_communities must be at least 1".into()));
        }
        if self.priors.dim() != self.num_communities {
            return Err(Error::InvalidParameter(format!(
                "priors are {}-dimensional for {} communities",
                self.priors.dim(),
                self.num_communities
            )));
        }
        self.priors.validate()?;
        if !(self.elbo_tol > 0.0) {
            return Err(Error::InvalidParameter("elbo_tol must be positive".into()));
        }
        if !(self.step_halving_floor > 0.0 && self.step_halving_floor <= 1.0) {
            return Err(Error::InvalidParameter("step_halving_floor must be in (0, 1]".into()));
        }
        if self.minibatch_size == 0 {
            return Err(Error::InvalidParameter("minibatch_size must be positive".into()));
        }
        if self.subpops_per_minibatch == Some(0) {
            return Err(Error::InvalidParameter("subpops_per_minibatch must be positive".into()));
        }
        if !(self.init.tau > 0.0) {
            return Err(Error::InvalidParameter("init tau must be positive".into()));
        }
        Ok(())
    }
}
