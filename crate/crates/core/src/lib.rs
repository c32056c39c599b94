//! Blockwise self-supervised training of deep graph convolutional encoders.
//!
//! The encoder is a stack of GCN layers split into contiguous blocks. Each
//! block is trained with its own two-view canonical-correlation loss on the
//! outputs of the previous block, which are held constant, so no gradient
//! crosses a block boundary. An end-to-end mode trains the same stack with a
//! single loss at the top for comparison.
//!
//! ```
//! use blockgcl_core::{fit, generate_sbm, TrainConfig};
//!
//! let g = generate_sbm(2, 20, 0.5, 0.05, 8, 7).unwrap();
//! let cfg = TrainConfig { depth: 4, block_size: 2, hidden_dim: 16, epochs: 5, ..Default::default() };
//! let (encoder, record) = fit::<f64>(&g, &cfg).unwrap();
//! assert_eq!(encoder.num_blocks(), 2);
//! assert_eq!(record.epochs.len(), 5);
//! ```

pub mod augment;
pub mod encoder;
mod error;
pub mod eval;
pub mod experiment;
pub mod graph;
pub mod linalg;
pub mod objective;
pub mod trainer;

pub use augment::{make_views, AugmentationSpec, GraphView, MaskMode};
pub use encoder::{
    full_forward, load_checkpoint, partition_blocks, save_checkpoint, Activation, BlockEncoder, GcnLayer,
};
pub use error::{Error, Result};
pub use eval::{linear_probe, mad, mad_profile, ProbeConfig, ProbeResult};
pub use experiment::{run_experiment, ExperimentOutput, TrainedEncoder};
pub use graph::{generate_sbm, load_dataset, normalized_adjacency, save_dataset, GraphDataset, NormalizedAdjacency, Split};
pub use linalg::{DenseMatrix, Real, Rng};
pub use objective::{Contrast, ContrastLoss};
pub use trainer::{fit, Precision, RunRecord, TrainConfig, TrainMode};
