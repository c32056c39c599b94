//! GCN layers with hand-written backward passes, grouped into
//! gradient-isolated blocks.
//!
//! A layer computes `act(Â · H · W)` with no bias. Backward, with
//! `G = grad_out ⊙ act'(pre)`:
//!
//! ```text
//! grad_W  = (Â · H)ᵀ · G
//! grad_H  = Â · (G · Wᵀ)        (Â is symmetric)
//! ```

mod checkpoint;

pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointHeader, CHECKPOINT_MAGIC};

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::graph::NormalizedAdjacency;
use crate::linalg::{glorot_init, matmul, spmm, DenseMatrix, Real, Rng};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    pub fn as_str(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Identity => "identity",
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Activation {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "relu" => Ok(Activation::Relu),
            "identity" => Ok(Activation::Identity),
            other => Err(format!("unknown activation {other:?} (expected relu or identity)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GcnLayer<T = f64> {
    weight: DenseMatrix<T>,
    activation: Activation,
}

impl<T: Real> GcnLayer<T> {
    pub fn new(weight: DenseMatrix<T>, activation: Activation) -> Self {
        Self { weight, activation }
    }

    pub fn weight(&self) -> &DenseMatrix<T> {
        &self.weight
    }

    pub fn weight_mut(&mut self) -> &mut DenseMatrix<T> {
        &mut self.weight
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn in_dim(&self) -> usize {
        self.weight.rows()
    }

    pub fn out_dim(&self) -> usize {
        self.weight.cols()
    }
}

/// Activations a layer keeps between its forward and backward pass.
#[derive(Clone, Debug, Default)]
pub struct LayerTape<T = f64> {
    aggregated: Option<DenseMatrix<T>>,
    pre_activation: Option<DenseMatrix<T>>,
}

impl<T: Real> LayerTape<T> {
    pub fn new() -> Self {
        Self {
            aggregated: None,
            pre_activation: None,
        }
    }

    pub fn is_recorded(&self) -> bool {
        self.aggregated.is_some() && self.pre_activation.is_some()
    }

    pub fn clear(&mut self) {
        self.aggregated = None;
        self.pre_activation = None;
    }

    /// `Â · H_in` from the last forward.
    pub fn aggregated(&self) -> Option<&DenseMatrix<T>> {
        self.aggregated.as_ref()
    }

    pub fn pre_activation(&self) -> Option<&DenseMatrix<T>> {
        self.pre_activation.as_ref()
    }
}

fn apply_activation<T: Real>(act: Activation, pre: &DenseMatrix<T>) -> DenseMatrix<T> {
    match act {
        Activation::Relu => pre.map(|v| if v > T::zero() { v } else { T::zero() }),
        Activation::Identity => pre.clone(),
    }
}

fn check_input<T: Real>(layer: &GcnLayer<T>, adj: &NormalizedAdjacency, h_in: &DenseMatrix<T>) -> Result<()> {
    if h_in.rows() != adj.num_nodes() || h_in.cols() != layer.in_dim() {
        return Err(Error::ShapeMismatch {
            op: "layer_forward",
            lhs: (adj.num_nodes(), layer.in_dim()),
            rhs: h_in.shape(),
        });
    }
    Ok(())
}

/// `act(Â · h_in · W)`, recording `Â · h_in` and the pre-activation on `tape`.
pub fn layer_forward<T: Real>(
    layer: &GcnLayer<T>,
    adj: &NormalizedAdjacency,
    h_in: &DenseMatrix<T>,
    tape: &mut LayerTape<T>,
) -> Result<DenseMatrix<T>> {
    check_input(layer, adj, h_in)?;
    let aggregated = spmm(adj, h_in)?;
    let pre = matmul(&aggregated, &layer.weight, false, false)?;
    let out = apply_activation(layer.activation, &pre);
    tape.aggregated = Some(aggregated);
    tape.pre_activation = Some(pre);
    Ok(out)
}

fn forward_no_tape<T: Real>(
    layer: &GcnLayer<T>,
    adj: &NormalizedAdjacency,
    h_in: &DenseMatrix<T>,
) -> Result<DenseMatrix<T>> {
    check_input(layer, adj, h_in)?;
    let pre = matmul(&spmm(adj, h_in)?, &layer.weight, false, false)?;
    Ok(apply_activation(layer.activation, &pre))
}

fn backward_impl<T: Real>(
    layer: &GcnLayer<T>,
    adj: &NormalizedAdjacency,
    grad_out: &DenseMatrix<T>,
    tape: &LayerTape<T>,
    need_input_grad: bool,
) -> Result<(DenseMatrix<T>, Option<DenseMatrix<T>>)> {
    let (Some(aggregated), Some(pre)) = (&tape.aggregated, &tape.pre_activation) else {
        return Err(Error::MissingTape("layer_backward"));
    };
    if grad_out.shape() != pre.shape() {
        return Err(Error::ShapeMismatch {
            op: "layer_backward",
            lhs: pre.shape(),
            rhs: grad_out.shape(),
        });
    }
    let g = match layer.activation {
        Activation::Relu => {
            let mut g = grad_out.clone();
            for (gv, &p) in g.as_mut_slice().iter_mut().zip(pre.as_slice()) {
                if p <= T::zero() {
                    *gv = T::zero();
                }
            }
            g
        }
        Activation::Identity => grad_out.clone(),
    };
    let grad_weight = matmul(aggregated, &g, true, false)?;
    let grad_in = if need_input_grad {
        Some(spmm(adj, &matmul(&g, &layer.weight, false, true)?)?)
    } else {
        None
    };
    Ok((grad_weight, grad_in))
}

/// Returns `(grad_weight, grad_in)` for the forward recorded on `tape`.
pub fn layer_backward<T: Real>(
    layer: &GcnLayer<T>,
    adj: &NormalizedAdjacency,
    grad_out: &DenseMatrix<T>,
    tape: &LayerTape<T>,
) -> Result<(DenseMatrix<T>, DenseMatrix<T>)> {
    let (gw, gi) = backward_impl(layer, adj, grad_out, tape, true)?;
    Ok((gw, gi.expect("input gradient requested")))
}

/// Splits `num_layers` layers into `num_layers / block_size` contiguous blocks.
/// Leftover layers go one each to the earliest blocks, so block sizes differ
/// by at most one.
pub fn partition_blocks(num_layers: usize, block_size: usize) -> Result<Vec<Range<usize>>> {
    if num_layers == 0 || block_size == 0 || block_size > num_layers {
        return Err(Error::invalid(format!(
            "block size {block_size} must lie in [1, {num_layers}] (and depth must be positive)"
        )));
    }
    let k = num_layers / block_size;
    let base = num_layers / k;
    let extra = num_layers % k;
    let mut ranges = Vec::with_capacity(k);
    let mut start = 0;
    for b in 0..k {
        let len = base + usize::from(b < extra);
        ranges.push(start..start + len);
        start += len;
    }
    Ok(ranges)
}

/// A stack of GCN layers partitioned into contiguous blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockEncoder<T = f64> {
    layers: Vec<GcnLayer<T>>,
    blocks: Vec<Range<usize>>,
}

impl<T: Real> BlockEncoder<T> {
    pub fn new(layers: Vec<GcnLayer<T>>, blocks: Vec<Range<usize>>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::invalid("encoder needs at least one layer"));
        }
        for (l, pair) in layers.windows(2).enumerate() {
            if pair[0].out_dim() != pair[1].in_dim() {
                return Err(Error::invalid(format!(
                    "layer {l} outputs {} dims but layer {} expects {}",
                    pair[0].out_dim(),
                    l + 1,
                    pair[1].in_dim()
                )));
            }
        }
        let mut next = 0;
        for r in &blocks {
            if r.start != next || r.end <= r.start {
                return Err(Error::invalid(format!("blocks {blocks:?} do not tile the layers")));
            }
            next = r.end;
        }
        if next != layers.len() {
            return Err(Error::invalid(format!(
                "blocks {blocks:?} do not cover {} layers",
                layers.len()
            )));
        }
        Ok(Self { layers, blocks })
    }

    /// Glorot-initialized encoder over `dims = [D0, D1, .., DL]`. Every layer
    /// uses ReLU except, when `block_output` is `Identity`, the last layer of
    /// each block.
    pub fn init(
        dims: &[usize],
        block_size: usize,
        block_output: Activation,
        rng: &mut Rng,
    ) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(Error::invalid(format!("invalid layer dimensions {dims:?}")));
        }
        let blocks = partition_blocks(dims.len() - 1, block_size)?;
        let layers = (0..dims.len() - 1)
            .map(|l| {
                let act = if blocks.iter().any(|b| b.end == l + 1) {
                    block_output
                } else {
                    Activation::Relu
                };
                GcnLayer::new(glorot_init(dims[l], dims[l + 1], rng), act)
            })
            .collect();
        Self::new(layers, blocks)
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn blocks(&self) -> &[Range<usize>] {
        &self.blocks
    }

    pub fn block(&self, i: usize) -> Range<usize> {
        self.blocks[i].clone()
    }

    pub fn layers(&self) -> &[GcnLayer<T>] {
        &self.layers
    }

    pub fn layer(&self, l: usize) -> &GcnLayer<T> {
        &self.layers[l]
    }

    pub fn layer_mut(&mut self, l: usize) -> &mut GcnLayer<T> {
        &mut self.layers[l]
    }

    /// `[D0, D1, .., DL]`
    pub fn dims(&self) -> Vec<usize> {
        std::iter::once(self.layers[0].in_dim())
            .chain(self.layers.iter().map(GcnLayer::out_dim))
            .collect()
    }

    pub fn weights(&self) -> Vec<&DenseMatrix<T>> {
        self.layers.iter().map(GcnLayer::weight).collect()
    }

    pub fn weights_mut(&mut self) -> Vec<&mut DenseMatrix<T>> {
        self.layers.iter_mut().map(GcnLayer::weight_mut).collect()
    }

    /// Same weights under a different block partition.
    pub fn repartitioned(&self, blocks: Vec<Range<usize>>) -> Result<Self> {
        Self::new(self.layers.clone(), blocks)
    }

    pub fn cast<U: Real>(&self) -> BlockEncoder<U> {
        BlockEncoder {
            layers: self
                .layers
                .iter()
                .map(|l| GcnLayer::new(l.weight.cast(), l.activation))
                .collect(),
            blocks: self.blocks.clone(),
        }
    }
}

/// Forward through block `i`. `h_in` is treated as a constant: nothing
/// recorded here propagates gradient into earlier blocks.
pub fn block_forward<T: Real>(
    enc: &BlockEncoder<T>,
    i: usize,
    adj: &NormalizedAdjacency,
    h_in: &DenseMatrix<T>,
    tape: &mut Vec<LayerTape<T>>,
) -> Result<DenseMatrix<T>> {
    let range = enc
        .blocks
        .get(i)
        .cloned()
        .ok_or_else(|| Error::invalid(format!("block index {i} out of range")))?;
    stack_forward(&enc.layers[range], adj, h_in, tape)
}

/// Weight gradients of block `i`'s layers given the gradient at its output.
pub fn block_backward<T: Real>(
    enc: &BlockEncoder<T>,
    i: usize,
    adj: &NormalizedAdjacency,
    grad_out: &DenseMatrix<T>,
    tape: &[LayerTape<T>],
) -> Result<Vec<DenseMatrix<T>>> {
    let range = enc
        .blocks
        .get(i)
        .cloned()
        .ok_or_else(|| Error::invalid(format!("block index {i} out of range")))?;
    stack_backward(&enc.layers[range], adj, grad_out, tape)
}

/// Forward through consecutive layers, one tape entry per layer.
pub(crate) fn stack_forward<T: Real>(
    layers: &[GcnLayer<T>],
    adj: &NormalizedAdjacency,
    h_in: &DenseMatrix<T>,
    tape: &mut Vec<LayerTape<T>>,
) -> Result<DenseMatrix<T>> {
    tape.clear();
    let mut h = h_in.clone();
    for layer in layers {
        let mut entry = LayerTape::new();
        h = layer_forward(layer, adj, &h, &mut entry)?;
        tape.push(entry);
    }
    Ok(h)
}

/// Backward through consecutive layers. The input of the first layer is a
/// constant, so its gradient is never formed.
pub(crate) fn stack_backward<T: Real>(
    layers: &[GcnLayer<T>],
    adj: &NormalizedAdjacency,
    grad_out: &DenseMatrix<T>,
    tape: &[LayerTape<T>],
) -> Result<Vec<DenseMatrix<T>>> {
    if tape.len() != layers.len() {
        return Err(Error::MissingTape("block_backward"));
    }
    let mut grads = vec![None; layers.len()];
    let mut g = grad_out.clone();
    for l in (0..layers.len()).rev() {
        let (gw, gi) = backward_impl(&layers[l], adj, &g, &tape[l], l > 0)?;
        grads[l] = Some(gw);
        if let Some(gi) = gi {
            g = gi;
        }
    }
    Ok(grads.into_iter().map(|g| g.expect("every layer visited")).collect())
}

/// Inference pass through every layer; returns the final representation.
pub fn full_forward<T: Real>(
    enc: &BlockEncoder<T>,
    adj: &NormalizedAdjacency,
    x: &DenseMatrix<T>,
) -> Result<DenseMatrix<T>> {
    let mut h = x.clone();
    for layer in &enc.layers {
        h = forward_no_tape(layer, adj, &h)?;
    }
    Ok(h)
}

/// Inference pass returning every layer's output `[H1, .., HL]`.
pub fn forward_all_layers<T: Real>(
    enc: &BlockEncoder<T>,
    adj: &NormalizedAdjacency,
    x: &DenseMatrix<T>,
) -> Result<Vec<DenseMatrix<T>>> {
    let mut outs: Vec<DenseMatrix<T>> = Vec::with_capacity(enc.num_layers());
    for layer in &enc.layers {
        let h = forward_no_tape(layer, adj, outs.last().unwrap_or(x))?;
        outs.push(h);
    }
    Ok(outs)
}
