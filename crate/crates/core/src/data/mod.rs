//! Datasets, loaders, synthetic corpora, and the random-labeling transforms.

mod dataset;
mod idx;
mod labels;
mod prng;
mod split;
mod synth;

use thiserror::Error;

pub use dataset::{Dataset, Labeling};
pub use idx::{decode_idx, encode_idx_images, encode_idx_labels, load_idx, parse_idx, save_idx};
pub use labels::{
    assign_random_labels, assign_random_labels_with_classes, random_labels, reshuffle_labels,
    reshuffle_labels_with_classes, reshuffle_seed,
};
pub use prng::{derive_seed, splitmix64, Prng};
pub use split::{split, split_indices, SplitSpec};
pub use synth::{synth_blobs, synth_shapes, SHAPE_CLASSES};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{what}: bad magic number {found:#010x}, expected {expected:#010x}")]
    BadMagic { what: String, expected: u32, found: u32 },
    #[error("{what}: truncated, need {expected} bytes but file has {found}")]
    Truncated { what: String, expected: usize, found: usize },
    #[error("{what}: {extra} unexpected trailing bytes")]
    TrailingBytes { what: String, extra: usize },
    #[error("sample count {samples} does not match label count {labels}")]
    CountMismatch { samples: usize, labels: usize },
    #[error("label {label} at index {index} is outside [0, {num_classes})")]
    LabelOutOfRange { index: usize, label: usize, num_classes: usize },
    #[error("dataset is empty")]
    Empty,
    #[error("train fraction {train_fraction} leaves an empty side when splitting {n} samples")]
    EmptySplit { n: usize, train_fraction: f64 },
    #[error("{0}")]
    InvalidArgument(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Nn(#[from] crate::nn::NnError),
}
