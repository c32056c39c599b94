//! Train, measure and probe in one call, dispatching on precision.

use std::path::Path;

use crate::encoder::{full_forward, save_checkpoint, BlockEncoder};
use crate::error::Result;
use crate::eval::{linear_probe, mad_profile, ProbeConfig};
use crate::graph::{normalized_adjacency, GraphDataset};
use crate::linalg::{DenseMatrix, Real};
use crate::trainer::{fit, Precision, RunRecord, TrainConfig};

#[derive(Clone, Debug, PartialEq)]
pub enum TrainedEncoder {
    F32(BlockEncoder<f32>),
    F64(BlockEncoder<f64>),
}

impl TrainedEncoder {
    pub fn save(&self, seed: u64, path: impl AsRef<Path>) -> Result<()> {
        match self {
            TrainedEncoder::F32(e) => save_checkpoint(e, seed, path),
            TrainedEncoder::F64(e) => save_checkpoint(e, seed, path),
        }
    }

    pub fn to_f64(&self) -> BlockEncoder<f64> {
        match self {
            TrainedEncoder::F32(e) => e.cast(),
            TrainedEncoder::F64(e) => e.clone(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentOutput {
    pub encoder: TrainedEncoder,
    pub record: RunRecord,
    /// Final-layer representations on the clean graph.
    pub embeddings: DenseMatrix<f64>,
}

fn run_typed<T: Real>(
    g: &GraphDataset,
    cfg: &TrainConfig,
    probe: Option<&ProbeConfig>,
) -> Result<(BlockEncoder<T>, RunRecord, DenseMatrix<f64>)> {
    let (enc, mut record) = fit::<T>(g, cfg)?;
    let normalized;
    let g = if cfg.normalize_features {
        normalized = g.row_normalized();
        &normalized
    } else {
        g
    };
    record.mad = mad_profile(&enc, g)?;
    let z = full_forward(&enc, &normalized_adjacency(g), &g.features().cast::<T>())?;
    if let Some(p) = probe {
        record.probe = Some(linear_probe(&z, g, p, cfg.seed)?);
    }
    Ok((enc, record, z.cast()))
}

/// Trains with `cfg`, then records the per-layer MAD and, if requested, the
/// linear-probe accuracy of the final representations.
pub fn run_experiment(
    g: &GraphDataset,
    cfg: &TrainConfig,
    probe: Option<&ProbeConfig>,
) -> Result<ExperimentOutput> {
    let (encoder, record, embeddings) = match cfg.precision {
        Precision::F32 => {
            let (e, r, z) = run_typed::<f32>(g, cfg, probe)?;
            (TrainedEncoder::F32(e), r, z)
        }
        Precision::F64 => {
            let (e, r, z) = run_typed::<f64>(g, cfg, probe)?;
            (TrainedEncoder::F64(e), r, z)
        }
    };
    Ok(ExperimentOutput {
        encoder,
        record,
        embeddings,
    })
}
