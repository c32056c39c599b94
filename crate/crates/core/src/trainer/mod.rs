//! Blockwise and end-to-end self-supervised training.

mod adam;
mod config;

use std::time::Instant;

pub use adam::{adam_step, AdamState, BETA1, BETA2, EPSILON};
pub use config::{Precision, TrainConfig, TrainMode};

use crate::augment::{make_views_with_features, GraphView};
use crate::encoder::{block_backward, block_forward, stack_backward, stack_forward, BlockEncoder};
use crate::error::{Error, Result};
use crate::eval::ProbeResult;
use crate::graph::GraphDataset;
use crate::linalg::{DenseMatrix, Real, Rng};
use crate::objective::Contrast;

/// RNG stream for weight initialization.
pub const INIT_STREAM: u64 = 0;
/// RNG stream for per-epoch view sampling.
pub const AUGMENT_STREAM: u64 = 1;

/// Per-block local losses and the weight gradient of every layer.
///
/// Block `i` is fed the outputs of block `i-1` as constants, so each layer's
/// gradient comes from its own block's loss only.
pub fn blockwise_gradients<T: Real, C: Contrast>(
    enc: &BlockEncoder<T>,
    view_a: &GraphView<T>,
    view_b: &GraphView<T>,
    contrast: &C,
) -> Result<(Vec<f64>, Vec<DenseMatrix<T>>)> {
    let mut losses = Vec::with_capacity(enc.num_blocks());
    let mut grads = Vec::with_capacity(enc.num_layers());
    let mut tape_a = Vec::new();
    let mut tape_b = Vec::new();
    let mut h_a = view_a.features.clone();
    let mut h_b = view_b.features.clone();
    for i in 0..enc.num_blocks() {
        let z_a = block_forward(enc, i, &view_a.adjacency, &h_a, &mut tape_a)?;
        let z_b = block_forward(enc, i, &view_b.adjacency, &h_b, &mut tape_b)?;
        let out = contrast.loss_and_grad(&z_a, &z_b)?;
        let ga = block_backward(enc, i, &view_a.adjacency, &out.grad_a, &tape_a)?;
        let gb = block_backward(enc, i, &view_b.adjacency, &out.grad_b, &tape_b)?;
        for (a, b) in ga.into_iter().zip(&gb) {
            grads.push(a.add(b)?);
        }
        losses.push(out.loss);
        h_a = z_a;
        h_b = z_b;
    }
    Ok((losses, grads))
}

/// Loss on the final layer and its gradient for every layer, backpropagated
/// through the whole stack regardless of block partition.
pub fn end2end_gradients<T: Real, C: Contrast>(
    enc: &BlockEncoder<T>,
    view_a: &GraphView<T>,
    view_b: &GraphView<T>,
    contrast: &C,
) -> Result<(f64, Vec<DenseMatrix<T>>)> {
    let mut tape_a = Vec::new();
    let mut tape_b = Vec::new();
    let z_a = stack_forward(enc.layers(), &view_a.adjacency, &view_a.features, &mut tape_a)?;
    let z_b = stack_forward(enc.layers(), &view_b.adjacency, &view_b.features, &mut tape_b)?;
    let out = contrast.loss_and_grad(&z_a, &z_b)?;
    let ga = stack_backward(enc.layers(), &view_a.adjacency, &out.grad_a, &tape_a)?;
    let gb = stack_backward(enc.layers(), &view_b.adjacency, &out.grad_b, &tape_b)?;
    let grads = ga.into_iter().zip(&gb).map(|(a, b)| a.add(b)).collect::<Result<_>>()?;
    Ok((out.loss, grads))
}

/// Local loss of every block, forward only.
pub fn blockwise_losses<T: Real, C: Contrast>(
    enc: &BlockEncoder<T>,
    view_a: &GraphView<T>,
    view_b: &GraphView<T>,
    contrast: &C,
) -> Result<Vec<f64>> {
    let mut tape = Vec::new();
    let mut h_a = view_a.features.clone();
    let mut h_b = view_b.features.clone();
    let mut losses = Vec::with_capacity(enc.num_blocks());
    for i in 0..enc.num_blocks() {
        h_a = block_forward(enc, i, &view_a.adjacency, &h_a, &mut tape)?;
        h_b = block_forward(enc, i, &view_b.adjacency, &h_b, &mut tape)?;
        losses.push(contrast.loss(&h_a, &h_b)?);
    }
    Ok(losses)
}

/// Loss of the final layer, forward only.
pub fn end2end_loss<T: Real, C: Contrast>(
    enc: &BlockEncoder<T>,
    view_a: &GraphView<T>,
    view_b: &GraphView<T>,
    contrast: &C,
) -> Result<f64> {
    let mut tape = Vec::new();
    let z_a = stack_forward(enc.layers(), &view_a.adjacency, &view_a.features, &mut tape)?;
    let z_b = stack_forward(enc.layers(), &view_b.adjacency, &view_b.features, &mut tape)?;
    contrast.loss(&z_a, &z_b)
}

fn check_losses(losses: &[f64], epoch: usize) -> Result<()> {
    match losses.iter().position(|l| !l.is_finite()) {
        Some(block) => Err(Error::NonFinite {
            what: "loss",
            epoch,
            block,
        }),
        None => Ok(()),
    }
}

fn check_grads<T: Real>(enc: &BlockEncoder<T>, grads: &[DenseMatrix<T>], epoch: usize) -> Result<()> {
    for (i, range) in enc.blocks().iter().enumerate() {
        if grads[range.clone()].iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite {
                what: "gradient",
                epoch,
                block: i,
            });
        }
    }
    Ok(())
}

fn apply_step<T: Real>(
    enc: &mut BlockEncoder<T>,
    grads: &[DenseMatrix<T>],
    cfg: &TrainConfig,
    state: &mut AdamState<T>,
) -> Result<()> {
    adam_step(
        &mut enc.weights_mut(),
        grads,
        state,
        cfg.learning_rate,
        cfg.weight_decay,
    )
}

fn check_partition<T: Real>(enc: &BlockEncoder<T>, cfg: &TrainConfig) -> Result<()> {
    if enc.num_layers() != cfg.depth {
        return Err(Error::invalid(format!(
            "encoder has {} layers, config asks for {}",
            enc.num_layers(),
            cfg.depth
        )));
    }
    if cfg.mode == TrainMode::Blockwise {
        let want = crate::encoder::partition_blocks(cfg.depth, cfg.block_size)?;
        if enc.blocks() != want.as_slice() {
            return Err(Error::invalid("encoder partition does not match block_size"));
        }
    }
    Ok(())
}

/// One blockwise epoch: sample two views, compute every block's local loss
/// and gradient, then take one optimizer step. Returns the block losses.
pub fn train_blockwise_epoch<T: Real>(
    enc: &mut BlockEncoder<T>,
    g: &GraphDataset,
    cfg: &TrainConfig,
    state: &mut AdamState<T>,
    rng: &mut Rng,
) -> Result<Vec<f64>> {
    let features = g.features().cast();
    blockwise_epoch(enc, g, &features, cfg, state, rng)
}

/// One end-to-end epoch. Returns the final-layer loss.
pub fn train_end2end_epoch<T: Real>(
    enc: &mut BlockEncoder<T>,
    g: &GraphDataset,
    cfg: &TrainConfig,
    state: &mut AdamState<T>,
    rng: &mut Rng,
) -> Result<f64> {
    let features = g.features().cast();
    end2end_epoch(enc, g, &features, cfg, state, rng)
}

fn blockwise_epoch<T: Real>(
    enc: &mut BlockEncoder<T>,
    g: &GraphDataset,
    features: &DenseMatrix<T>,
    cfg: &TrainConfig,
    state: &mut AdamState<T>,
    rng: &mut Rng,
) -> Result<Vec<f64>> {
    check_partition(enc, cfg)?;
    let epoch = state.step_count() as usize;
    let (va, vb) = make_views_with_features(g, features, &cfg.aug, rng);
    let (losses, grads) = blockwise_gradients(enc, &va, &vb, &cfg.contrast())?;
    check_losses(&losses, epoch)?;
    check_grads(enc, &grads, epoch)?;
    apply_step(enc, &grads, cfg, state)?;
    Ok(losses)
}

fn end2end_epoch<T: Real>(
    enc: &mut BlockEncoder<T>,
    g: &GraphDataset,
    features: &DenseMatrix<T>,
    cfg: &TrainConfig,
    state: &mut AdamState<T>,
    rng: &mut Rng,
) -> Result<f64> {
    check_partition(enc, cfg)?;
    let epoch = state.step_count() as usize;
    let (va, vb) = make_views_with_features(g, features, &cfg.aug, rng);
    let (loss, grads) = end2end_gradients(enc, &va, &vb, &cfg.contrast())?;
    check_losses(&[loss], epoch)?;
    check_grads(enc, &grads, epoch)?;
    apply_step(enc, &grads, cfg, state)?;
    Ok(loss)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// One entry per block (a single entry for end-to-end runs).
    pub block_losses: Vec<f64>,
    pub wall_ms: f64,
}

impl EpochRecord {
    pub fn total_loss(&self) -> f64 {
        self.block_losses.iter().sum()
    }
}

/// Everything observed during one run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub config: TrainConfig,
    pub epochs: Vec<EpochRecord>,
    /// Per-layer MAD of the trained encoder, `None` where undefined.
    pub mad: Vec<Option<f64>>,
    pub probe: Option<ProbeResult>,
}

impl RunRecord {
    pub fn new(config: TrainConfig) -> Self {
        Self {
            config,
            epochs: Vec::new(),
            mad: Vec::new(),
            probe: None,
        }
    }

    /// Loss log rows `(epoch, block, loss, wall_ms)`.
    pub fn loss_rows(&self) -> impl Iterator<Item = (usize, usize, f64, f64)> + '_ {
        self.epochs.iter().flat_map(|e| {
            e.block_losses
                .iter()
                .enumerate()
                .map(move |(b, &l)| (e.epoch, b, l, e.wall_ms))
        })
    }
}

/// Fresh encoder for `cfg` on a graph with `num_features` input dimensions.
pub fn init_encoder<T: Real>(num_features: usize, cfg: &TrainConfig) -> Result<BlockEncoder<T>> {
    cfg.validate()?;
    let mut rng = Rng::with_stream(cfg.seed, INIT_STREAM);
    BlockEncoder::init(
        &cfg.layer_dims(num_features),
        cfg.effective_block_size(),
        cfg.block_output,
        &mut rng,
    )
}

/// Trains an encoder from scratch. With `epochs == 0` the initialized
/// encoder is returned untouched.
pub fn fit<T: Real>(g: &GraphDataset, cfg: &TrainConfig) -> Result<(BlockEncoder<T>, RunRecord)> {
    let normalized;
    let g = if cfg.normalize_features {
        normalized = g.row_normalized();
        &normalized
    } else {
        g
    };
    let mut enc = init_encoder::<T>(g.num_features(), cfg)?;
    let mut state = AdamState::new(enc.weights());
    let mut rng = Rng::with_stream(cfg.seed, AUGMENT_STREAM);
    let features: DenseMatrix<T> = g.features().cast();
    let mut record = RunRecord::new(cfg.clone());
    for epoch in 0..cfg.epochs {
        let start = Instant::now();
        let block_losses = match cfg.mode {
            TrainMode::Blockwise => blockwise_epoch(&mut enc, g, &features, cfg, &mut state, &mut rng)?,
            TrainMode::End2End => vec![end2end_epoch(&mut enc, g, &features, cfg, &mut state, &mut rng)?],
        };
        let wall_ms = if cfg.record_timing {
            start.elapsed().as_secs_f64() * 1e3
        } else {
            0.0
        };
        record.epochs.push(EpochRecord {
            epoch,
            block_losses,
            wall_ms,
        });
    }
    Ok((enc, record))
}
