//! From-scratch LSTM and bidirectional LSTM sequence classifiers over
//! occupancy grids.
//!
//! The bidirectional model restarts its backward state every `T_B` frames so
//! that at inference time it can run on a predicted future of bounded length.

mod cell;
mod checkpoint;
mod grad;
mod model;
mod online;
mod train;

use thiserror::Error;

pub use cell::{lstm_cell, LstmCellParams};
pub use checkpoint::{Checkpoint, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use grad::{loss, loss_and_gradient, LossConfig, TrainSample};
pub use model::{forward, forward_bidir, forward_unidir, FrameOutput, ModelKind, ModelWeights, Tensor};
pub use online::{predict_online, OnlinePredictor};
pub use train::{
    evaluate, evaluate_samples, initial_cross_entropy, inverse_frequency_weights, make_samples, train, train_samples,
    EpochStats, TrainConfig, TrainOutcome,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrainError {
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("no training sequences")]
    EmptyDataset,
    #[error("every training frame is labeled ignore")]
    AllIgnore,
    #[error("parameters became non-finite in epoch {epoch}")]
    Diverged { epoch: usize },
}

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("malformed checkpoint: {0}")]
    Json(#[from] serde_json::Error),
    #[error("not a recurrent-model checkpoint (format `{0}`)")]
    Format(String),
    #[error("checkpoint version {found} is not supported (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error("checkpoint declares a {declared:?} model but holds {found:?} weights")]
    KindMismatch { declared: ModelKind, found: ModelKind },
    #[error("bad tensor shape: {0}")]
    Shape(String),
}
