use super::{GraphDataset, Split};
use crate::error::{Error, Result};
use crate::linalg::Rng;

pub const MAX_SPLIT_ATTEMPTS: u64 = 100;

/// Replaces the split with a seeded random one.
///
/// Ratios are normalized to sum to one; train and val sizes are rounded and
/// the test split takes the rest. If some class lands outside the train split,
/// the shuffle is redrawn on the next stream of `seed`, up to
/// [`MAX_SPLIT_ATTEMPTS`] times.
pub fn make_random_split(
    g: &GraphDataset,
    ratios: (f64, f64, f64),
    seed: u64,
) -> Result<GraphDataset> {
    let (tr, va, te) = ratios;
    if [tr, va, te].iter().any(|r| !r.is_finite() || *r < 0.0) || tr + va + te <= 0.0 {
        return Err(Error::invalid(format!(
            "split ratios {ratios:?} must be non-negative with a positive sum"
        )));
    }
    let total = tr + va + te;
    let n = g.num_nodes();
    let n_train = ((tr / total) * n as f64).round() as usize;
    let n_val = (((va / total) * n as f64).round() as usize).min(n - n_train.min(n));
    let n_train = n_train.min(n);

    let mut out = g.clone();
    for attempt in 0..MAX_SPLIT_ATTEMPTS {
        let mut rng = Rng::with_stream(seed, attempt);
        let mut order: Vec<usize> = (0..n).collect();
        rng.shuffle(&mut order);
        let mut split = vec![Split::Test; n];
        for (rank, &node) in order.iter().enumerate() {
            split[node] = if rank < n_train {
                Split::Train
            } else if rank < n_train + n_val {
                Split::Val
            } else {
                Split::Test
            };
        }
        out.set_split(split);
        if out.classes_missing_from_train().is_empty() {
            return Ok(out);
        }
    }
    Err(Error::InvalidDataset(format!(
        "no split with every class in train after {MAX_SPLIT_ATTEMPTS} attempts"
    )))
}
