use std::fmt;
use std::str::FromStr;

use crate::augment::AugmentationSpec;
use crate::encoder::{partition_blocks, Activation};
use crate::error::{Error, Result};
use crate::objective::{ContrastLoss, DEFAULT_EPSILON_STD, DEFAULT_LAMBDA};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TrainMode {
    /// One local loss per block, no gradient across block boundaries.
    Blockwise,
    /// One loss on the final layer, backpropagated through every layer.
    End2End,
}

impl TrainMode {
    pub fn as_str(self) -> &'static str {
        match self {
            TrainMode::Blockwise => "blockwise",
            TrainMode::End2End => "end2end",
        }
    }
}

impl fmt::Display for TrainMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TrainMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "blockwise" => Ok(TrainMode::Blockwise),
            "end2end" => Ok(TrainMode::End2End),
            other => Err(format!("unknown mode {other:?} (expected blockwise or end2end)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Precision {
    F32,
    F64,
}

impl Precision {
    pub fn as_str(self) -> &'static str {
        match self {
            Precision::F32 => "f32",
            Precision::F64 => "f64",
        }
    }
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Precision {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "f32" => Ok(Precision::F32),
            "f64" => Ok(Precision::F64),
            other => Err(format!("unknown precision {other:?} (expected f32 or f64)")),
        }
    }
}

/// Every knob of one training run.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub depth: usize,
    pub block_size: usize,
    pub lambda: f64,
    pub epsilon_std: f64,
    pub aug: AugmentationSpec,
    pub hidden_dim: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub epochs: usize,
    pub seed: u64,
    pub mode: TrainMode,
    pub precision: Precision,
    /// Activation of the last layer in each block (every other layer uses ReLU).
    pub block_output: Activation,
    /// Scale feature rows to unit L1 norm before training.
    pub normalize_features: bool,
    /// Record wall-clock time per epoch. Off by default so that loss logs of
    /// repeated runs are byte-identical; when off, times are written as 0.
    pub record_timing: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            depth: 2,
            block_size: 1,
            lambda: DEFAULT_LAMBDA,
            epsilon_std: DEFAULT_EPSILON_STD,
            aug: AugmentationSpec {
                p_edge_drop: 0.2,
                p_feat_mask: 0.2,
                mask_mode: Default::default(),
            },
            hidden_dim: 512,
            learning_rate: 1e-3,
            weight_decay: 0.0,
            epochs: 100,
            seed: 0,
            mode: TrainMode::Blockwise,
            precision: Precision::F64,
            block_output: Activation::Relu,
            normalize_features: false,
            record_timing: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.depth == 0 {
            return Err(Error::invalid("depth must be at least 1"));
        }
        if self.hidden_dim == 0 {
            return Err(Error::invalid("hidden_dim must be at least 1"));
        }
        if self.mode == TrainMode::Blockwise {
            partition_blocks(self.depth, self.block_size)?;
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning_rate must be positive"));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::invalid("weight_decay must be non-negative"));
        }
        self.aug.validate()?;
        ContrastLoss::new(self.lambda, self.epsilon_std)?;
        Ok(())
    }

    /// Block size actually used to partition the encoder; end-to-end runs are one block.
    pub fn effective_block_size(&self) -> usize {
        match self.mode {
            TrainMode::Blockwise => self.block_size,
            TrainMode::End2End => self.depth,
        }
    }

    /// `[F, D, D, .., D]` with `depth` hidden layers.
    pub fn layer_dims(&self, num_features: usize) -> Vec<usize> {
        std::iter::once(num_features)
            .chain(std::iter::repeat_n(self.hidden_dim, self.depth))
            .collect()
    }

    pub fn contrast(&self) -> ContrastLoss {
        ContrastLoss {
            lambda: self.lambda,
            epsilon_std: self.epsilon_std,
        }
    }
}
