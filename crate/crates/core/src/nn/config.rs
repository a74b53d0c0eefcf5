use std::fmt;
use std::str::FromStr;

use super::NnError;

/// Quantity the plateau scheduler watches during a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Monitor {
    TrainLoss,
    ValAccuracy,
}

impl fmt::Display for Monitor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Monitor::TrainLoss => "train_loss",
            Monitor::ValAccuracy => "val_accuracy",
        })
    }
}

impl FromStr for Monitor {
    type Err = NnError;

    fn from_str(s: &str) -> Result<Self, NnError> {
        match s {
            "train_loss" => Ok(Monitor::TrainLoss),
            "val_accuracy" => Ok(Monitor::ValAccuracy),
            other => Err(NnError::InvalidArgument(format!("unknown monitor `{other}`"))),
        }
    }
}

/// Hyperparameters of one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub initial_lr: f64,
    pub momentum: f64,
    pub patience: usize,
    pub decay_factor: f64,
    pub min_lr: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub monitor: Monitor,
}

impl Default for TrainConfig {
    /// 200 epochs at lr 0.1 with momentum 0.9 and a 10-epoch plateau
    /// patience; decay factor, floor and batch size are local choices.
    fn default() -> Self {
        Self {
            epochs: 200,
            initial_lr: 0.1,
            momentum: 0.9,
            patience: 10,
            decay_factor: 0.1,
            min_lr: 1e-5,
            batch_size: 32,
            seed: 0,
            monitor: Monitor::TrainLoss,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), NnError> {
        let fail = |msg: String| Err(NnError::InvalidArgument(msg));
        if !(self.initial_lr > 0.0 && self.initial_lr.is_finite()) {
            return fail(format!("initial_lr = {} must be positive", self.initial_lr));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return fail(format!("momentum = {} must lie in [0, 1)", self.momentum));
        }
        if self.patience == 0 {
            return fail("patience must be positive".into());
        }
        if !(self.decay_factor > 0.0 && self.decay_factor < 1.0) {
            return fail(format!("decay_factor = {} must lie in (0, 1)", self.decay_factor));
        }
        if !(self.min_lr > 0.0 && self.min_lr.is_finite()) {
            return fail(format!("min_lr = {} must be positive", self.min_lr));
        }
        if self.batch_size == 0 {
            return fail("batch_size must be positive".into());
        }
        Ok(())
    }
}
