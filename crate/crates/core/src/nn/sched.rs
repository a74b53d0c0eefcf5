use super::NnError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Minimize,
    Maximize,
}

/// Reduce-on-plateau learning-rate schedule.
///
/// The first observed metric sets the best value. A strictly better metric
/// resets the counter; anything else increments it. When the counter exceeds
/// `patience`, `lr <- max(lr * decay_factor, min_lr)` and the counter resets.
#[derive(Debug, Clone, PartialEq)]
pub struct PlateauScheduler {
    pub patience: usize,
    pub decay_factor: f64,
    pub min_lr: f64,
    pub mode: Mode,
    lr: f64,
    best: Option<f64>,
    since_improvement: usize,
}

impl PlateauScheduler {
    pub fn new(lr: f64, patience: usize, decay_factor: f64, min_lr: f64, mode: Mode) -> Result<Self, NnError> {
        if !lr.is_finite() || lr <= 0.0 || min_lr.is_nan() || min_lr <= 0.0 {
            return Err(NnError::InvalidArgument("learning rates must be positive".into()));
        }
        if !(decay_factor > 0.0 && decay_factor < 1.0) {
            return Err(NnError::InvalidArgument(format!("decay factor {decay_factor} must lie in (0, 1)")));
        }
        if patience == 0 {
            return Err(NnError::InvalidArgument("patience must be positive".into()));
        }
        Ok(Self { patience, decay_factor, min_lr, mode, lr: lr.max(min_lr), best: None, since_improvement: 0 })
    }

    pub fn lr(&self) -> f64 {
        self.lr
    }

    pub fn best(&self) -> Option<f64> {
        self.best
    }

    pub fn epochs_since_improvement(&self) -> usize {
        self.since_improvement
    }

    /// Records one epoch's metric and returns the learning rate for the next epoch.
    pub fn step(&mut self, metric: f64) -> Result<f64, NnError> {
        if metric.is_nan() {
            return Err(NnError::NonFinite("scheduler metric is NaN".into()));
        }
        let improved = match (self.best, self.mode) {
            (None, _) => true,
            (Some(best), Mode::Minimize) => metric < best,
            (Some(best), Mode::Maximize) => metric > best,
        };
        if improved {
            self.best = Some(metric);
            self.since_improvement = 0;
        } else {
            self.since_improvement += 1;
            if self.since_improvement > self.patience {
                self.lr = (self.lr * self.decay_factor).max(self.min_lr);
                self.since_improvement = 0;
            }
        }
        Ok(self.lr)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn improving_metric_never_decays() {
        let mut s = PlateauScheduler::new(0.1, 10, 0.1, 1e-5, Mode::Minimize).unwrap();
        for e in 0..200 {
            assert_eq!(s.step(100.0 - e as f64).unwrap(), 0.1);
        }
    }

    #[test]
    fn constant_metric_first_decays_at_epoch_12() {
        let mut s = PlateauScheduler::new(0.1, 10, 0.1, 1e-5, Mode::Minimize).unwrap();
        let lrs: Vec<f64> = (1..=12).map(|_| s.step(1.0).unwrap()).collect();
        assert!(lrs[..11].iter().all(|&lr| lr == 0.1));
        assert!((lrs[11] - 0.01).abs() < 1e-15);
        assert_eq!(s.epochs_since_improvement(), 0);
    }

    #[test]
    fn equal_metric_is_not_an_improvement_in_either_mode() {
        let mut s = PlateauScheduler::new(0.1, 1, 0.5, 1e-5, Mode::Maximize).unwrap();
        s.step(0.5).unwrap();
        s.step(0.5).unwrap();
        assert_eq!(s.step(0.5).unwrap(), 0.05);
        assert_eq!(s.step(0.6).unwrap(), 0.05);
    }

    #[test]
    fn floor_at_min_lr() {
        let mut s = PlateauScheduler::new(1e-5, 1, 0.1, 1e-5, Mode::Minimize).unwrap();
        for _ in 0..20 {
            assert_eq!(s.step(1.0).unwrap(), 1e-5);
        }
    }

    #[test]
    fn nan_metric_is_rejected() {
        let mut s = PlateauScheduler::new(0.1, 10, 0.1, 1e-5, Mode::Minimize).unwrap();
        assert!(s.step(f64::NAN).is_err());
    }
}
