use super::train::{init_network, train_round};
use super::{Checkpoint, MetricsLog, ProtocolError};
use crate::data::{reshuffle_labels_with_classes, Dataset};
use crate::nn::{ArchSpec, Monitor, TrainConfig};

/// Training-set loss and accuracy measured right after a new labeling is
/// drawn, before any update on it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundStart {
    pub round: u32,
    pub loss: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone)]
pub struct ReshuffleRun {
    pub log: MetricsLog,
    pub round_starts: Vec<RoundStart>,
    pub checkpoint: Checkpoint,
}

/// Memorizes `rounds` successive independent random labelings of `d` with
/// one network. Round 1 starts from a fresh initialization; every later round
/// keeps the weights but restarts momentum, the plateau schedule and the
/// learning rate. Each round runs `epochs_per_round` epochs.
pub fn reshuffle_experiment(
    d: &Dataset,
    arch: &ArchSpec,
    cfg: &TrainConfig,
    rounds: u32,
    epochs_per_round: usize,
    base_seed: u64,
) -> Result<ReshuffleRun, ProtocolError> {
    reshuffle_experiment_with_classes(d, arch, cfg, rounds, epochs_per_round, base_seed, d.num_classes())
}

pub fn reshuffle_experiment_with_classes(
    d: &Dataset,
    arch: &ArchSpec,
    cfg: &TrainConfig,
    rounds: u32,
    epochs_per_round: usize,
    base_seed: u64,
    num_classes: usize,
) -> Result<ReshuffleRun, ProtocolError> {
    if rounds == 0 {
        return Err(ProtocolError::InvalidArgument("need at least one round".into()));
    }
    let cfg = TrainConfig { epochs: epochs_per_round, monitor: Monitor::TrainLoss, ..cfg.clone() };
    let mut net = init_network(arch, num_classes, cfg.seed)?;
    let mut log = MetricsLog::default();
    let mut round_starts = Vec::with_capacity(rounds as usize);
    let mut checkpoint = None;
    for round in 1..=rounds {
        let labeled = reshuffle_labels_with_classes(d, base_seed, round, num_classes)?;
        let (loss, accuracy) = super::evaluate(&mut net, &labeled)?;
        round_starts.push(RoundStart { round, loss, accuracy });
        let run = train_round(&mut net, &labeled, None, &cfg, round)?;
        if round == 1 {
            log.config_fingerprint = run.log.config_fingerprint.clone();
        }
        log.extend(&run.log)?;
        checkpoint = Some(run.checkpoint);
    }
    Ok(ReshuffleRun { log, round_starts, checkpoint: checkpoint.expect("rounds >= 1") })
}
