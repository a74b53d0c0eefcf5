use std::collections::BTreeMap;

use sha2::{Digest, Sha256};

use super::{Checkpoint, EpochRecord, MetricsLog, ProtocolError, Split};
use crate::data::{derive_seed, Dataset, Prng};
use crate::nn::{argmax_rows, softmax_cross_entropy, Mode, Monitor, Network, NnError, PlateauScheduler, SgdMomentum, TrainConfig};

pub(crate) const STREAM_BODY_INIT: u64 = 1;
pub(crate) const STREAM_HEAD_INIT: u64 = 2;
pub(crate) const STREAM_SHUFFLE: u64 = 3;
pub(crate) const STREAM_LABELS: u64 = 4;

const EVAL_CHUNK: usize = 256;

/// Result of one training run.
#[derive(Debug, Clone)]
pub struct TrainRun {
    pub checkpoint: Checkpoint,
    pub log: MetricsLog,
    /// Hash of every minibatch index sequence visited, in order.
    pub order_digest: String,
}

/// Builds a freshly initialized network whose body and head streams derive from `seed`.
pub fn init_network(arch: &crate::nn::ArchSpec, num_classes: usize, seed: u64) -> Result<Network, ProtocolError> {
    Ok(Network::new(arch, num_classes, derive_seed(seed, STREAM_BODY_INIT), derive_seed(seed, STREAM_HEAD_INIT))?)
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Short stable hash of a training configuration and the labeling it ran on.
pub fn config_fingerprint(cfg: &TrainConfig, data: &Dataset, net: &Network) -> String {
    let text = format!(
        "epochs={};initial_lr={:?};momentum={:?};patience={};decay_factor={:?};min_lr={:?};batch_size={};seed={};monitor={};labeling={};n={};classes={};arch={}",
        cfg.epochs,
        cfg.initial_lr,
        cfg.momentum,
        cfg.patience,
        cfg.decay_factor,
        cfg.min_lr,
        cfg.batch_size,
        cfg.seed,
        cfg.monitor,
        data.labeling(),
        data.len(),
        data.num_classes(),
        net.arch(),
    );
    hex(&Sha256::digest(text.as_bytes())[..8])
}

/// Reshapes `d` to the network's input shape when only the view differs.
fn conform(net: &Network, d: &Dataset) -> Result<Dataset, ProtocolError> {
    if d.sample_shape() == net.arch().input.as_slice() {
        return Ok(d.clone());
    }
    d.with_sample_shape(&net.arch().input).map_err(|_| {
        ProtocolError::Nn(NnError::ShapeMismatch {
            context: "dataset".into(),
            expected: format!("samples of shape {:?}", net.arch().input),
            found: format!("{:?}", d.sample_shape()),
        })
    })
}

fn check_head(net: &Network, d: &Dataset) -> Result<(), ProtocolError> {
    if net.num_classes() != d.num_classes() {
        return Err(ProtocolError::HeadMismatch { head: net.num_classes(), classes: d.num_classes() });
    }
    Ok(())
}

/// Full-dataset mean loss and argmax accuracy. Parameters are not modified.
pub fn evaluate(net: &mut Network, d: &Dataset) -> Result<(f64, f64), ProtocolError> {
    if d.is_empty() {
        return Err(ProtocolError::EmptyDataset);
    }
    check_head(net, d)?;
    let d = conform(net, d)?;
    let mut loss_sum = 0.0;
    let mut correct = 0usize;
    let indices: Vec<usize> = (0..d.len()).collect();
    for chunk in indices.chunks(EVAL_CHUNK) {
        let (x, y) = d.batch(chunk);
        let logits = net.predict(&x)?;
        let (loss, _) = softmax_cross_entropy(&logits, &y)?;
        loss_sum += loss * chunk.len() as f64;
        correct += argmax_rows(&logits).iter().zip(&y).filter(|(p, t)| p == t).count();
    }
    Ok((loss_sum / d.len() as f64, correct as f64 / d.len() as f64))
}

/// Runs exactly `cfg.epochs` epochs of minibatch momentum SGD. Each epoch
/// visits a seeded permutation of the training set (final partial batch
/// included), then evaluates the training set and the validation set (if
/// any) and steps the plateau scheduler on `cfg.monitor`.
pub fn train(net: &mut Network, train_d: &Dataset, val_d: Option<&Dataset>, cfg: &TrainConfig) -> Result<TrainRun, ProtocolError> {
    train_round(net, train_d, val_d, cfg, 1)
}

pub(crate) fn train_round(
    net: &mut Network,
    train_d: &Dataset,
    val_d: Option<&Dataset>,
    cfg: &TrainConfig,
    round: u32,
) -> Result<TrainRun, ProtocolError> {
    cfg.validate()?;
    check_head(net, train_d)?;
    let train_d = conform(net, train_d)?;
    let val_d = match val_d {
        Some(v) => {
            check_head(net, v)?;
            Some(conform(net, v)?)
        }
        None if cfg.monitor == Monitor::ValAccuracy => return Err(ProtocolError::MissingValidation),
        None => None,
    };

    let fingerprint = config_fingerprint(cfg, &train_d, net);
    let mut log = MetricsLog::new(fingerprint.clone());
    log.labelings.push((round, train_d.labeling()));
    let mode = match cfg.monitor {
        Monitor::TrainLoss => Mode::Minimize,
        Monitor::ValAccuracy => Mode::Maximize,
    };
    let mut opt = SgdMomentum::new(cfg.initial_lr, cfg.momentum)?;
    let mut sched = PlateauScheduler::new(cfg.initial_lr, cfg.patience, cfg.decay_factor, cfg.min_lr, mode)?;
    let shuffle_base = derive_seed(cfg.seed, STREAM_SHUFFLE);
    let mut order = Sha256::new();

    for epoch in 1..=cfg.epochs {
        let lr = opt.lr;
        let epoch_key = (u64::from(round) << 32) | epoch as u64;
        let perm = Prng::new(derive_seed(shuffle_base, epoch_key)).permutation(train_d.len());
        for chunk in perm.chunks(cfg.batch_size) {
            for &i in chunk {
                order.update((i as u64).to_le_bytes());
            }
            let (x, y) = train_d.batch(chunk);
            let non_finite = |_| ProtocolError::NonFiniteLoss { round, epoch };
            let logits = net.forward(&x).map_err(|e| match e {
                NnError::NonFinite(_) => non_finite(()),
                other => other.into(),
            })?;
            let (_, dlogits) = softmax_cross_entropy(&logits, &y).map_err(|e| match e {
                NnError::NonFinite(_) => non_finite(()),
                other => other.into(),
            })?;
            net.backward(&dlogits)?;
            opt.step(&mut net.params_mut())?;
        }

        let (train_loss, train_acc) =
            evaluate(net, &train_d).map_err(|e| if e.is_non_finite() { ProtocolError::NonFiniteLoss { round, epoch } } else { e })?;
        log.push(EpochRecord { round, epoch, split: Split::Train, loss: train_loss, accuracy: train_acc, lr })?;
        let mut monitored = train_loss;
        if let Some(v) = &val_d {
            let (val_loss, val_acc) =
                evaluate(net, v).map_err(|e| if e.is_non_finite() { ProtocolError::NonFiniteLoss { round, epoch } } else { e })?;
            log.push(EpochRecord { round, epoch, split: Split::Val, loss: val_loss, accuracy: val_acc, lr })?;
            if cfg.monitor == Monitor::ValAccuracy {
                monitored = val_acc;
            }
        }
        opt.lr = sched.step(monitored)?;
    }

    let mut provenance = BTreeMap::new();
    provenance.insert("config".to_string(), fingerprint);
    provenance.insert("labeling".to_string(), train_d.labeling().to_string());
    provenance.insert("round".to_string(), round.to_string());
    provenance.insert("epoch".to_string(), cfg.epochs.to_string());
    Ok(TrainRun {
        checkpoint: Checkpoint::from_network(net, provenance),
        log,
        order_digest: hex(&order.finalize()[..16]),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{synth_blobs, Labeling};
    use crate::nn::{ArchSpec, Tensor};

    #[test]
    fn zero_epochs_returns_initialization() {
        let d = synth_blobs(20, 2, 3, 0.5, 1).unwrap();
        let arch = ArchSpec::mlp(3, &[4]);
        let mut net = init_network(&arch, 2, 5).unwrap();
        let before = Checkpoint::from_network(&net, BTreeMap::new());
        let cfg = TrainConfig { epochs: 0, ..TrainConfig::default() };
        let run = train(&mut net, &d, None, &cfg).unwrap();
        assert_eq!(run.checkpoint.params, before.params);
        assert!(run.log.is_empty());
    }

    #[test]
    fn head_width_must_match() {
        let d = synth_blobs(20, 3, 3, 0.5, 1).unwrap();
        let mut net = init_network(&ArchSpec::mlp(3, &[4]), 2, 5).unwrap();
        assert!(matches!(train(&mut net, &d, None, &TrainConfig::default()), Err(ProtocolError::HeadMismatch { .. })));
    }

    #[test]
    fn val_monitor_needs_validation_set() {
        let d = synth_blobs(20, 2, 3, 0.5, 1).unwrap();
        let mut net = init_network(&ArchSpec::mlp(3, &[4]), 2, 5).unwrap();
        let cfg = TrainConfig { monitor: Monitor::ValAccuracy, ..TrainConfig::default() };
        assert!(matches!(train(&mut net, &d, None, &cfg), Err(ProtocolError::MissingValidation)));
    }

    #[test]
    fn divergence_reports_epoch() {
        let d = synth_blobs(40, 2, 3, 0.5, 1).unwrap();
        let samples = Tensor::new(vec![40, 3], d.samples().data().iter().map(|v| v * 1e6).collect()).unwrap();
        let d = Dataset::new(samples, d.labels().to_vec(), 2, Labeling::True).unwrap();
        let mut net = init_network(&ArchSpec::mlp(3, &[64, 64]), 2, 5).unwrap();
        let cfg = TrainConfig { epochs: 50, initial_lr: 1e3, momentum: 0.9, ..TrainConfig::default() };
        match train(&mut net, &d, None, &cfg) {
            Err(ProtocolError::NonFiniteLoss { round: 1, epoch }) => assert!(epoch >= 1),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn evaluate_is_pure_and_rejects_empty() {
        let d = synth_blobs(30, 3, 2, 0.5, 9).unwrap();
        let mut net = init_network(&ArchSpec::mlp(2, &[8]), 3, 1).unwrap();
        let before: Vec<Tensor> = net.params().into_iter().cloned().collect();
        let a = evaluate(&mut net, &d).unwrap();
        let b = evaluate(&mut net, &d).unwrap();
        assert_eq!(a, b);
        let after: Vec<Tensor> = net.params().into_iter().cloned().collect();
        assert_eq!(before, after);
    }
}
