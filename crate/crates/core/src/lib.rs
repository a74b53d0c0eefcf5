//! Random-label memorization pre-training on small networks.
//!
//! The crate trains classifiers from scratch on datasets whose labels have
//! been replaced by fixed i.i.d. random labels, fine-tunes the result on a
//! correctly labeled task, and measures how repeated relabeling of the same
//! network speeds up memorization.
//!
//! * [`nn`]: tensors, layers, loss, momentum SGD, plateau schedule, gradient check
//! * [`data`]: datasets, IDX loading, synthetic corpora, random relabeling
//! * [`protocol`]: training loop, pre-training, fine-tuning, reshuffle and transfer experiments
//! * [`persist`]: checkpoint files, metrics CSV, run configuration files
//! * [`cli`]: the `memlab` command-line front end and SVG learning curves

pub mod cli;
pub mod data;
pub mod nn;
pub mod persist;
pub mod protocol;
