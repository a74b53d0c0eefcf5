use std::fmt;

use super::ProtocolError;
use crate::data::Labeling;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Split {
    Train,
    Val,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Val => "val",
        })
    }
}

impl std::str::FromStr for Split {
    type Err = ProtocolError;

    fn from_str(s: &str) -> Result<Self, ProtocolError> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            other => Err(ProtocolError::InvalidArgument(format!("unknown split `{other}`"))),
        }
    }
}

/// One evaluation of one split at the end of an epoch. `lr` is the rate
/// used during that epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub round: u32,
    pub epoch: usize,
    pub split: Split,
    pub loss: f64,
    pub accuracy: f64,
    pub lr: f64,
}

/// Per-epoch records of a run, plus the labeling used in each round.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricsLog {
    pub config_fingerprint: String,
    pub labelings: Vec<(u32, Labeling)>,
    records: Vec<EpochRecord>,
}

impl MetricsLog {
    pub fn new(config_fingerprint: impl Into<String>) -> Self {
        Self { config_fingerprint: config_fingerprint.into(), ..Self::default() }
    }

    /// Builds a log from bare records (e.g. read back from CSV), checking invariants.
    pub fn from_records(records: Vec<EpochRecord>) -> Result<Self, ProtocolError> {
        let mut log = MetricsLog::default();
        for r in records {
            log.push(r)?;
        }
        Ok(log)
    }

    /// Appends a record. Epochs within a round must start at 1 and be contiguous;
    /// rounds must not decrease.
    pub fn push(&mut self, r: EpochRecord) -> Result<(), ProtocolError> {
        let bad = |why: &str| Err(ProtocolError::InvalidArgument(format!("metrics record {r:?}: {why}")));
        if !(0.0..=1.0).contains(&r.accuracy) {
            return bad("accuracy outside [0, 1]");
        }
        if !(r.loss >= 0.0 && r.loss.is_finite()) {
            return bad("loss must be finite and non-negative");
        }
        if !(r.lr > 0.0 && r.lr.is_finite()) {
            return bad("lr must be positive");
        }
        match self.records.last() {
            None if r.epoch != 1 => return bad("first epoch must be 1"),
            Some(last) if r.round < last.round => return bad("rounds out of order"),
            Some(last) if r.round > last.round && r.epoch != 1 => return bad("round must start at epoch 1"),
            Some(last) if r.round == last.round && !(r.epoch == last.epoch && r.split > last.split || r.epoch == last.epoch + 1) => {
                return bad("epochs must be contiguous")
            }
            _ => {}
        }
        self.records.push(r);
        Ok(())
    }

    pub fn records(&self) -> &[EpochRecord] {
        &self.records
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Distinct rounds in order of appearance.
    pub fn rounds(&self) -> Vec<u32> {
        let mut out: Vec<u32> = Vec::new();
        for r in &self.records {
            if out.last() != Some(&r.round) {
                out.push(r.round);
            }
        }
        out
    }

    pub fn split_records(&self, round: u32, split: Split) -> impl Iterator<Item = &EpochRecord> {
        self.records.iter().filter(move |r| r.round == round && r.split == split)
    }

    pub fn labeling(&self, round: u32) -> Option<Labeling> {
        self.labelings.iter().find(|(r, _)| *r == round).map(|&(_, l)| l)
    }

    /// Last recorded accuracy for `split` in the final round.
    pub fn final_accuracy(&self, split: Split) -> Option<f64> {
        self.records.iter().rev().find(|r| r.split == split).map(|r| r.accuracy)
    }

    /// Appends all records of `other` (whose rounds must follow this log's).
    pub fn extend(&mut self, other: &MetricsLog) -> Result<(), ProtocolError> {
        for r in other.records() {
            self.push(*r)?;
        }
        self.labelings.extend(other.labelings.iter().copied());
        Ok(())
    }
}

/// First epoch of `round` whose training accuracy reaches `threshold`.
pub fn epochs_to_threshold(log: &MetricsLog, round: u32, threshold: f64) -> Result<Option<usize>, ProtocolError> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(ProtocolError::InvalidArgument(format!("threshold {threshold} must lie in (0, 1]")));
    }
    if !log.records().iter().any(|r| r.round == round) {
        return Err(ProtocolError::UnknownRound(round));
    }
    Ok(log.split_records(round, Split::Train).find(|r| r.accuracy >= threshold).map(|r| r.epoch))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn train_log(accs: &[f64]) -> MetricsLog {
        let records = accs
            .iter()
            .enumerate()
            .map(|(i, &a)| EpochRecord { round: 1, epoch: i + 1, split: Split::Train, loss: 1.0, accuracy: a, lr: 0.1 })
            .collect();
        MetricsLog::from_records(records).unwrap()
    }

    #[test]
    fn first_crossing() {
        let log = train_log(&[0.2, 0.5, 0.95, 0.97]);
        assert_eq!(epochs_to_threshold(&log, 1, 0.9).unwrap(), Some(3));
        assert_eq!(epochs_to_threshold(&log, 1, 0.2).unwrap(), Some(1));
        assert_eq!(epochs_to_threshold(&train_log(&[0.5, 0.99]), 1, 1.0).unwrap(), None);
    }

    #[test]
    fn unknown_round_and_bad_threshold() {
        let log = train_log(&[0.5]);
        assert!(matches!(epochs_to_threshold(&log, 2, 0.9), Err(ProtocolError::UnknownRound(2))));
        assert!(epochs_to_threshold(&log, 1, 0.0).is_err());
        assert!(epochs_to_threshold(&log, 1, 1.5).is_err());
    }

    #[test]
    fn rejects_gaps_and_bad_values() {
        let rec = |round, epoch, split, acc| EpochRecord { round, epoch, split, loss: 0.5, accuracy: acc, lr: 0.1 };
        let mut log = MetricsLog::default();
        assert!(log.push(rec(1, 2, Split::Train, 0.5)).is_err());
        log.push(rec(1, 1, Split::Train, 0.5)).unwrap();
        log.push(rec(1, 1, Split::Val, 0.5)).unwrap();
        assert!(log.push(rec(1, 1, Split::Val, 0.5)).is_err());
        assert!(log.push(rec(1, 3, Split::Train, 0.5)).is_err());
        assert!(log.push(rec(1, 2, Split::Train, 1.5)).is_err());
        log.push(rec(1, 2, Split::Train, 0.5)).unwrap();
        assert!(log.push(rec(2, 2, Split::Train, 0.5)).is_err());
        log.push(rec(2, 1, Split::Train, 0.5)).unwrap();
        assert_eq!(log.rounds(), vec![1, 2]);
    }
}
