//! Graph datasets, their CSV layout, normalized adjacency, synthetic graphs and splits.

mod adjacency;
mod dataset;
pub mod io;
mod split;
mod synthetic;

pub use adjacency::{normalized_adjacency, normalized_adjacency_from_edges, NormalizedAdjacency};
pub use dataset::{GraphDataset, Split};
pub use io::{load_dataset, save_dataset};
pub use split::{make_random_split, MAX_SPLIT_ATTEMPTS};
pub use synthetic::{generate_sbm, SBM_FEATURE_NOISE, SBM_SPLIT_RATIOS};
