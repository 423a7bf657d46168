//! Small numerical building blocks used by initialization and evaluation.

mod hungarian;
mod kmeans;
mod svd;

pub use hungarian::{max_weight_assignment, min_cost_assignment};
pub use kmeans::{kmeans, KMeans};
pub use svd::{randomized_svd, SparseMatrix, TruncatedSvd};
