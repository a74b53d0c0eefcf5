use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use super::train::{hex, init_network, train, STREAM_HEAD_INIT, STREAM_LABELS};
use super::{Checkpoint, MetricsLog, ProtocolError, Split, TrainRun};
use crate::data::{assign_random_labels, derive_seed, Dataset};
use crate::nn::{ArchSpec, Monitor, Network, TrainConfig};

/// Trains a fresh network on `d` after replacing its labels with fixed
/// random ones drawn from `label_seed`. The scheduler watches training loss.
pub fn pretrain_random(d: &Dataset, arch: &ArchSpec, cfg: &TrainConfig, label_seed: u64) -> Result<TrainRun, ProtocolError> {
    pretrain_relabeled(&assign_random_labels(d, label_seed), arch, cfg)
}

/// Pre-training on a dataset whose labels are already random.
pub fn pretrain_relabeled(relabeled: &Dataset, arch: &ArchSpec, cfg: &TrainConfig) -> Result<TrainRun, ProtocolError> {
    let cfg = TrainConfig { monitor: Monitor::TrainLoss, ..cfg.clone() };
    let mut net = init_network(arch, relabeled.num_classes(), cfg.seed)?;
    train(&mut net, relabeled, None, &cfg)
}

/// Keeps every non-head parameter of `ckpt`, attaches a fresh head sized for
/// `target_train`, and trains all layers on the true labels with the
/// scheduler watching validation accuracy.
pub fn finetune(ckpt: &Checkpoint, target_train: &Dataset, target_val: &Dataset, cfg: &TrainConfig) -> Result<TrainRun, ProtocolError> {
    let mut net = Network::with_new_head(
        &ckpt.arch,
        ckpt.body_params(),
        target_train.num_classes(),
        derive_seed(cfg.seed, STREAM_HEAD_INIT),
    )?;
    let cfg = TrainConfig { monitor: Monitor::ValAccuracy, ..cfg.clone() };
    let mut run = train(&mut net, target_train, Some(target_val), &cfg)?;
    if let Some(source) = ckpt.provenance.get("labeling") {
        run.checkpoint.provenance.insert("pretrained_on".into(), source.clone());
    }
    Ok(run)
}

/// Supervised training from scratch. The body is initialized from
/// `body_seed`'s stream and the head from `cfg.seed`'s, which is exactly
/// what a zero-epoch pre-training at `body_seed` followed by [`finetune`]
/// with `cfg` produces.
pub fn baseline(
    arch: &ArchSpec,
    target_train: &Dataset,
    target_val: &Dataset,
    cfg: &TrainConfig,
    body_seed: u64,
) -> Result<TrainRun, ProtocolError> {
    let body = init_network(arch, 1, body_seed)?;
    let body: Vec<_> = body.body_params().into_iter().cloned().collect();
    let mut net = Network::with_new_head(arch, &body, target_train.num_classes(), derive_seed(cfg.seed, STREAM_HEAD_INIT))?;
    let cfg = TrainConfig { monitor: Monitor::ValAccuracy, ..cfg.clone() };
    train(&mut net, target_train, Some(target_val), &cfg)
}

/// Baseline and pre-trained runs for one seed. Both share the fine-tuning
/// seed, data and configuration; only the initialization differs.
#[derive(Debug, Clone)]
pub struct PairedRun {
    pub seed: u64,
    pub baseline: TrainRun,
    pub pretraining: TrainRun,
    pub pretrained: TrainRun,
}

impl PairedRun {
    pub fn baseline_accuracy(&self) -> f64 {
        self.baseline.log.final_accuracy(Split::Val).unwrap_or(0.0)
    }

    pub fn pretrained_accuracy(&self) -> f64 {
        self.pretrained.log.final_accuracy(Split::Val).unwrap_or(0.0)
    }

    pub fn difference(&self) -> f64 {
        self.pretrained_accuracy() - self.baseline_accuracy()
    }
}

#[derive(Debug, Clone)]
pub struct TransferReport {
    pub seeds: Vec<u64>,
    pub pairs: Vec<PairedRun>,
    pub mean_difference: f64,
    /// Sample standard deviation (zero for a single seed).
    pub std_difference: f64,
}

impl TransferReport {
    fn from_pairs(pairs: Vec<PairedRun>) -> Self {
        let diffs: Vec<f64> = pairs.iter().map(PairedRun::difference).collect();
        let n = diffs.len() as f64;
        let mean = diffs.iter().sum::<f64>() / n;
        let std = if diffs.len() > 1 {
            (diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self { seeds: pairs.iter().map(|p| p.seed).collect(), pairs, mean_difference: mean, std_difference: std }
    }

    /// Number of seeds where the pre-trained run matched or beat the baseline.
    pub fn wins(&self) -> usize {
        self.pairs.iter().filter(|p| p.difference() >= 0.0).count()
    }

    /// Table of final validation accuracy: one row per method, one column per seed.
    pub fn table(&self) -> String {
        let mut header = format!("{:<18}", "method");
        for s in &self.seeds {
            header.push_str(&format!(" {:>9}", format!("seed {s}")));
        }
        header.push_str(&format!(" {:>9}", "mean"));
        let row = |name: &str, accs: Vec<f64>| {
            let mean = accs.iter().sum::<f64>() / accs.len() as f64;
            let mut line = format!("{name:<18}");
            for a in accs.iter().chain(std::iter::once(&mean)) {
                line.push_str(&format!(" {:>8.2}%", 100.0 * a));
            }
            line
        };
        let baseline = row("no pre-training", self.pairs.iter().map(PairedRun::baseline_accuracy).collect());
        let pretrained = row("with pre-training", self.pairs.iter().map(PairedRun::pretrained_accuracy).collect());
        format!(
            "{header}\n{baseline}\n{pretrained}\nmean difference {:+.2} pp (std {:.2} pp), pre-training >= baseline on {}/{} seeds\n",
            100.0 * self.mean_difference,
            100.0 * self.std_difference,
            self.wins(),
            self.pairs.len()
        )
    }
}

/// Paired baseline-vs-pretrained comparison, one pair per seed. For seed `s`
/// pre-training uses `pre_cfg` with seed `s` and random labels from a stream
/// derived from `s`; both fine-tuning runs use `ft_cfg` with seed `s`. Pairs
/// run on up to `threads` worker threads; results are ordered by seed.
#[allow(clippy::too_many_arguments)]
pub fn compare_transfer(
    source: &Dataset,
    target_train: &Dataset,
    target_val: &Dataset,
    arch: &ArchSpec,
    pre_cfg: &TrainConfig,
    ft_cfg: &TrainConfig,
    seeds: &[u64],
    threads: usize,
) -> Result<TransferReport, ProtocolError> {
    if seeds.is_empty() {
        return Err(ProtocolError::InvalidArgument("compare_transfer needs at least one seed".into()));
    }
    let run_pair = |seed: u64| -> Result<PairedRun, ProtocolError> {
        let pre = TrainConfig { seed, ..pre_cfg.clone() };
        let ft = TrainConfig { seed, ..ft_cfg.clone() };
        let baseline_run = baseline(arch, target_train, target_val, &ft, seed)?;
        let pretraining = pretrain_random(source, arch, &pre, derive_seed(seed, STREAM_LABELS))?;
        let pretrained = finetune(&pretraining.checkpoint, target_train, target_val, &ft)?;
        if baseline_run.order_digest != pretrained.order_digest {
            return Err(ProtocolError::UnpairedRuns { seed });
        }
        Ok(PairedRun { seed, baseline: baseline_run, pretraining, pretrained })
    };

    let slots: Vec<Mutex<Option<Result<PairedRun, ProtocolError>>>> = seeds.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = threads.clamp(1, seeds.len());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= seeds.len() {
                    break;
                }
                let result = run_pair(seeds[i]);
                *slots[i].lock().expect("slot lock") = Some(result);
            });
        }
    });
    let pairs = slots
        .into_iter()
        .map(|s| s.into_inner().expect("slot lock").expect("every seed ran"))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(TransferReport::from_pairs(pairs))
}

/// Hash of a log's records, for comparing runs without writing files.
pub fn log_digest(log: &MetricsLog) -> String {
    use sha2::{Digest, Sha256};
    let mut h = Sha256::new();
    for r in log.records() {
        h.update(format!("{}|{}|{}|{:?}|{:?}|{:?}\n", r.round, r.epoch, r.split, r.loss, r.accuracy, r.lr).as_bytes());
    }
    hex(&h.finalize()[..16])
}
