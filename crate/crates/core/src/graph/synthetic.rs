use super::{make_random_split, GraphDataset};
use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, Rng};

/// Standard deviation of the Gaussian noise added to SBM features.
pub const SBM_FEATURE_NOISE: f64 = 1.0;
/// Split ratios assigned to generated graphs.
pub const SBM_SPLIT_RATIOS: (f64, f64, f64) = (0.2, 0.2, 0.6);

/// Stochastic block model with `blocks` planted communities.
///
/// Node `i` belongs to block `i / nodes_per_block`, which is also its label.
/// Each pair is linked with probability `p_in` (same block) or `p_out`.
/// Features carry a one-hot block indicator (dimension `block % feature_dim`)
/// plus N(0, `SBM_FEATURE_NOISE`²) noise. Edges, features and split draw from
/// separate streams of `seed`.
pub fn generate_sbm(
    blocks: usize,
    nodes_per_block: usize,
    p_in: f64,
    p_out: f64,
    feature_dim: usize,
    seed: u64,
) -> Result<GraphDataset> {
    if blocks == 0 || nodes_per_block == 0 {
        return Err(Error::invalid("SBM needs at least one block and one node per block"));
    }
    if feature_dim == 0 {
        return Err(Error::invalid("SBM feature dimension must be positive"));
    }
    for (name, p) in [("p_in", p_in), ("p_out", p_out)] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::invalid(format!("{name} = {p} is not a probability")));
        }
    }
    let n = blocks * nodes_per_block;
    let block_of = |i: usize| i / nodes_per_block;

    let mut edge_rng = Rng::with_stream(seed, 0);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let p = if block_of(u) == block_of(v) { p_in } else { p_out };
            if edge_rng.bernoulli(p) {
                edges.push((u, v));
            }
        }
    }

    let mut feat_rng = Rng::with_stream(seed, 1);
    let features = DenseMatrix::from_fn(n, feature_dim, |i, j| {
        let signal = if block_of(i) % feature_dim == j { 1.0 } else { 0.0 };
        signal + SBM_FEATURE_NOISE * feat_rng.normal()
    });
    let labels = (0..n).map(block_of).collect();

    let g = GraphDataset::without_split(features, labels, edges)?;
    make_random_split(&g, SBM_SPLIT_RATIOS, seed.wrapping_add(0x5b17))
}
