use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "ard-mmsb", version, about = "Fit mixed membership blockmodels to aggregated relational data")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalArgs {
    /// Run configuration (key = value with [sections]); defaults apply when absent.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Overrides the config seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,

    /// Worker threads for minibatch fitting; 0 uses every core.
    #[arg(long, global = true, env = "ARD_MMSB_THREADS")]
    pub parallelism: Option<usize>,

    /// Overrides fit.num_passes (total passes, counting resumed ones).
    #[arg(long, global = true)]
    pub passes: Option<usize>,

    /// Overrides fit.elbo_tol.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Simulate a network with planted subpopulations.
    Simulate,

    /// Sample nodes and aggregate a graph into ARD counts.
    Aggregate {
        #[arg(long)]
        edges: PathBuf,
        #[arg(long)]
        subpops: PathBuf,
    },

    /// Write the SVD initialization as a checkpoint.
    Init {
        #[arg(long)]
        ard: PathBuf,
    },

    /// Run minibatch passes, from scratch or from a checkpoint.
    Fit {
        #[arg(long)]
        ard: PathBuf,
        #[arg(long)]
        resume: Option<PathBuf>,
    },

    /// Score one or more fitted checkpoints.
    Eval {
        /// Repeat runs; SE columns are computed across them.
        #[arg(long = "checkpoint")]
        checkpoints: Vec<PathBuf>,
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Node list mapping ARD rows to graph node ids.
        #[arg(long)]
        sampled: Option<PathBuf>,
        /// Full edge list, for link prediction on the sampled nodes.
        #[arg(long)]
        edges: Option<PathBuf>,
        /// Earlier checkpoint for between-pass KL.
        #[arg(long)]
        previous: Option<PathBuf>,
        /// Evaluate the ground truth itself as an estimate.
        #[arg(long)]
        truth_as_estimate: bool,
    },

    /// Write expected memberships and the blockmatrix as CSV.
    ExportMemberships {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        sampled: Option<PathBuf>,
    },
}
