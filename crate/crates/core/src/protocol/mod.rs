//! Experimental procedures: the supervised training loop, random-label
//! pre-training, fine-tuning with a fresh head, sequential label reshuffling,
//! and paired baseline-vs-pretrained comparison.

mod checkpoint;
mod metrics;
mod reshuffle;
mod train;
mod transfer;

use thiserror::Error;

pub use checkpoint::Checkpoint;
pub use metrics::{epochs_to_threshold, EpochRecord, MetricsLog, Split};
pub use reshuffle::{reshuffle_experiment, reshuffle_experiment_with_classes, ReshuffleRun, RoundStart};
pub use train::{config_fingerprint, evaluate, init_network, train, TrainRun};
pub use transfer::{baseline, compare_transfer, finetune, log_digest, pretrain_random, pretrain_relabeled, PairedRun, TransferReport};

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("head width {head} does not match the dataset's {classes} classes")]
    HeadMismatch { head: usize, classes: usize },
    #[error("loss became non-finite in round {round}, epoch {epoch}")]
    NonFiniteLoss { round: u32, epoch: usize },
    #[error("validation-accuracy monitoring needs a validation set")]
    MissingValidation,
    #[error("cannot evaluate an empty dataset")]
    EmptyDataset,
    #[error("round {0} does not appear in the log")]
    UnknownRound(u32),
    #[error("seed {seed}: baseline and pre-trained runs saw different data orders")]
    UnpairedRuns { seed: u64 },
    #[error("{0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Nn(#[from] crate::nn::NnError),
    #[error(transparent)]
    Data(#[from] crate::data::DataError),
}

impl ProtocolError {
    pub(crate) fn is_non_finite(&self) -> bool {
        matches!(self, ProtocolError::Nn(crate::nn::NnError::NonFinite(_)))
    }
}
