use std::fmt;
use std::str::FromStr;

use super::{DataError, Prng};
use crate::nn::Tensor;

/// Where a dataset's labels came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Labeling {
    True,
    Random { seed: u64 },
    Reshuffled { base_seed: u64, round: u32 },
}

impl fmt::Display for Labeling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Labeling::True => f.write_str("true"),
            Labeling::Random { seed } => write!(f, "random:{seed}"),
            Labeling::Reshuffled { base_seed, round } => write!(f, "reshuffled:{base_seed}:{round}"),
        }
    }
}

impl FromStr for Labeling {
    type Err = DataError;

    fn from_str(s: &str) -> Result<Self, DataError> {
        let bad = || DataError::InvalidArgument(format!("unrecognized labeling `{s}`"));
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            ["true"] => Ok(Labeling::True),
            ["random", seed] => Ok(Labeling::Random { seed: seed.parse().map_err(|_| bad())? }),
            ["reshuffled", seed, round] => Ok(Labeling::Reshuffled {
                base_seed: seed.parse().map_err(|_| bad())?,
                round: round.parse().map_err(|_| bad())?,
            }),
            _ => Err(bad()),
        }
    }
}

/// Samples `(n, ...)`, one label per sample, and the provenance of those labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    samples: Tensor,
    labels: Vec<usize>,
    num_classes: usize,
    labeling: Labeling,
}

impl Dataset {
    pub fn new(samples: Tensor, labels: Vec<usize>, num_classes: usize, labeling: Labeling) -> Result<Self, DataError> {
        if samples.shape().len() < 2 {
            return Err(DataError::InvalidArgument(format!(
                "samples need a leading sample dimension, got shape {:?}",
                samples.shape()
            )));
        }
        if samples.rows() != labels.len() {
            return Err(DataError::CountMismatch { samples: samples.rows(), labels: labels.len() });
        }
        if num_classes == 0 {
            return Err(DataError::InvalidArgument("num_classes must be positive".into()));
        }
        if let Some((index, &label)) = labels.iter().enumerate().find(|(_, &l)| l >= num_classes) {
            return Err(DataError::LabelOutOfRange { index, label, num_classes });
        }
        if !samples.is_finite() {
            return Err(DataError::InvalidArgument("samples contain non-finite values".into()));
        }
        Ok(Self { samples, labels, num_classes, labeling })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn samples(&self) -> &Tensor {
        &self.samples
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn labeling(&self) -> Labeling {
        self.labeling
    }

    /// Per-sample shape (everything after the leading dimension).
    pub fn sample_shape(&self) -> &[usize] {
        &self.samples.shape()[1..]
    }

    /// Same samples under new labels; sample data is untouched.
    pub fn relabeled(&self, labels: Vec<usize>, num_classes: usize, labeling: Labeling) -> Result<Self, DataError> {
        Dataset::new(self.samples.clone(), labels, num_classes, labeling)
    }

    /// Same data viewed with a different per-sample shape of equal size.
    pub fn with_sample_shape(&self, shape: &[usize]) -> Result<Self, DataError> {
        let mut full = vec![self.len()];
        full.extend_from_slice(shape);
        let samples = self.samples.clone().reshape(full).map_err(|_| {
            DataError::InvalidArgument(format!(
                "cannot view samples of shape {:?} as {shape:?}",
                self.sample_shape()
            ))
        })?;
        Ok(Self { samples, ..self.clone() })
    }

    /// Samples and labels at `indices`, in that order.
    pub fn batch(&self, indices: &[usize]) -> (Tensor, Vec<usize>) {
        let width = self.samples.row_len();
        let mut data = Vec::with_capacity(indices.len() * width);
        for &i in indices {
            data.extend_from_slice(&self.samples.data()[i * width..(i + 1) * width]);
        }
        let mut shape = vec![indices.len()];
        shape.extend_from_slice(self.sample_shape());
        let labels = indices.iter().map(|&i| self.labels[i]).collect();
        (Tensor::new(shape, data).expect("batch shape"), labels)
    }

    /// New dataset made of the samples at `indices` (class count and provenance kept).
    pub fn subset(&self, indices: &[usize]) -> Result<Self, DataError> {
        if indices.is_empty() {
            return Err(DataError::Empty);
        }
        if let Some(&i) = indices.iter().find(|&&i| i >= self.len()) {
            return Err(DataError::InvalidArgument(format!("index {i} out of range for {} samples", self.len())));
        }
        let (samples, labels) = self.batch(indices);
        Dataset::new(samples, labels, self.num_classes, self.labeling)
    }

    /// `n` samples chosen by a seeded permutation, kept in original order.
    pub fn take_random(&self, n: usize, seed: u64) -> Result<Self, DataError> {
        if n == 0 || n > self.len() {
            return Err(DataError::InvalidArgument(format!("cannot take {n} of {} samples", self.len())));
        }
        let mut idx = Prng::new(seed).permutation(self.len());
        idx.truncate(n);
        idx.sort_unstable();
        self.subset(&idx)
    }
}
