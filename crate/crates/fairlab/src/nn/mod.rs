//! Feed-forward binary classifier with hand-derived gradients: seeded
//! initialization, forward pass with inverted dropout, cross-entropy loss
//! variants, backpropagation, and SGD training.

mod loss;
mod model;
mod train;

pub use loss::{loss, loss_and_logit_grad, EoTerm, LossConfig};
pub use model::{
    backward, forward, init_model, mc_dropout_uncertainty, sgd_step, ForwardCache, Gradients,
    Layer, Model,
};
pub use train::{evaluate, train_epoch, train_run, DataSplits, Retention, RunOutput, TrainConfig};

use thiserror::Error;

use crate::metrics::MetricError;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("dimension mismatch at layer {layer}: expected {expected} inputs, got {got}")]
    DimensionMismatch {
        layer: usize,
        expected: usize,
        got: usize,
    },
    #[error("empty batch")]
    EmptyBatch,
    #[error("dropout_rate > 0 requires a dropout generator (and vice versa)")]
    DropoutRngMismatch,
    #[error("invalid config: {0}")]
    BadConfig(String),
    #[error("mc-dropout needs dropout_rate in (0,1) and passes >= 2")]
    BadMcDropout,
    #[error(transparent)]
    Metric(#[from] MetricError),
}
