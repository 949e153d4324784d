//! From-scratch encoder-decoder transformer: layers with hand-written
//! backpropagation, Adam with the inverse-square-root warmup schedule,
//! beam search and binary checkpoints.

use std::fmt::{Debug, Display};
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use ndarray::{LinalgScalar, ScalarOperand};
use num_traits::{Float, FromPrimitive};
use serde::{Deserialize, Serialize};

pub mod beam;
pub mod checkpoint;
pub mod layers;
pub mod model;
pub mod train;

pub use beam::{beam_search, greedy_decode, Hypothesis};
pub use checkpoint::Checkpoint;

pub use model::{Batch, Transformer};
pub use train::{EpochRecord, TrainOutcome, Trainer};

/// Scalar type the network is generic over. Training runs in `f32`;
/// gradient checks use `f64`.
pub trait Real:
    Float
    + LinalgScalar
    + ScalarOperand
    + FromPrimitive
    + Debug
    + Display
    + Default
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Send
    + Sync
    + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformerConfig {
    pub encoder_layers: usize,
    pub decoder_layers: usize,
    pub heads: usize,
    pub width: usize,
    pub ff_width: usize,
    pub dropout: f64,
    /// Maximum number of generated target tokens, `End` included.
    pub max_decode_len: usize,
}

impl Default for TransformerConfig {
    fn default() -> Self {
        TransformerConfig {
            encoder_layers: 2,
            decoder_layers: 2,
            heads: 4,
            width: 128,
            ff_width: 256,
            dropout: 0.1,
            max_decode_len: 12,
        }
    }
}

impl TransformerConfig {
    /// Small configuration for tests and demos.
    pub fn tiny() -> Self {
        TransformerConfig {
            encoder_layers: 1,
            decoder_layers: 1,
            heads: 2,
            width: 16,
            ff_width: 32,
            dropout: 0.0,
            max_decode_len: 12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub max_epochs: usize,
    pub dev_fraction: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub warmup_steps: usize,
    /// Epochs without dev improvement before stopping.
    pub patience: usize,
    pub beam_width: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 16,
            max_epochs: 40,
            dev_fraction: 0.1,
            beta1: 0.9,
            beta2: 0.98,
            epsilon: 1e-9,
            warmup_steps: 400,
            patience: 5,
            beam_width: 3,
            seed: 0,
        }
    }
}

/// `width^-0.5 * min(step^-0.5, step * warmup^-1.5)`, with `step >= 1`.
pub fn noam_rate(width: usize, warmup: usize, step: usize) -> f64 {
    let step = step.max(1) as f64;
    let warmup = warmup.max(1) as f64;
    (width as f64).powf(-0.5) * step.powf(-0.5).min(step * warmup.powf(-1.5))
}
