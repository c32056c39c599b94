//! Shared workloads for the kernel benchmarks.

use blockgcl_core::{generate_sbm, DenseMatrix, GraphDataset, Rng};

/// Cora-sized stochastic block model: 7 classes, ~2.7k nodes.
pub fn citation_like_graph(features: usize) -> GraphDataset {
    generate_sbm(7, 387, 0.01, 0.0004, features, 0).expect("valid SBM parameters")
}

pub fn gaussian(rows: usize, cols: usize, seed: u64) -> DenseMatrix<f64> {
    let mut rng = Rng::new(seed);
    DenseMatrix::from_fn(rows, cols, |_, _| rng.normal())
}
