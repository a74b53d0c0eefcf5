//! `key = value` run descriptions.
//!
//! ```text
//! # corpus to memorize
//! source.kind = idx
//! source.images = train-images-idx3-ubyte.gz
//! source.labels = train-labels-idx1-ubyte.gz
//! source.limit = 128
//! arch = in:1x28x28 flatten dense:512 relu dense:512 relu
//! epochs = 50
//! finetune.initial_lr = 0.01
//! ```
//!
//! Dataset keys take a `source.` or `target.` prefix; training keys may take a
//! `pretrain.` or `finetune.` prefix to override the shared value for one phase.
//! Relative paths resolve against the directory holding the file.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::PersistError;
use crate::data::{load_idx, split, synth_blobs, synth_shapes, DataError, Dataset, SplitSpec};
use crate::nn::{ArchSpec, Monitor, TrainConfig};

#[derive(Debug, Clone, PartialEq)]
pub enum DatasetKind {
    Idx { images: PathBuf, labels: PathBuf },
    Blobs { n: usize, classes: usize, dim: usize, spread: f64, seed: u64 },
    Shapes { n: usize, side: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSpec {
    pub kind: DatasetKind,
    /// Keep a seeded random subset of this many samples.
    pub limit: Option<usize>,
    pub subset_seed: u64,
    /// Fraction kept for training when the set is split into train and validation.
    pub train_fraction: f64,
    pub split_seed: u64,
}

impl DatasetSpec {
    pub fn load(&self) -> Result<Dataset, DataError> {
        let d = match &self.kind {
            DatasetKind::Idx { images, labels } => load_idx(images, labels)?,
            DatasetKind::Blobs { n, classes, dim, spread, seed } => synth_blobs(*n, *classes, *dim, *spread, *seed)?,
            DatasetKind::Shapes { n, side, seed } => synth_shapes(*n, *side, *seed)?,
        };
        match self.limit {
            Some(n) => d.take_random(n, self.subset_seed),
            None => Ok(d),
        }
    }

    /// Loaded set divided into (train, validation).
    pub fn load_split(&self) -> Result<(Dataset, Dataset), DataError> {
        split(&self.load()?, SplitSpec { train_fraction: self.train_fraction, seed: self.split_seed })
    }
}

/// Per-phase replacements for the shared training values.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PhaseOverrides {
    pub epochs: Option<usize>,
    pub initial_lr: Option<f64>,
    pub momentum: Option<f64>,
    pub patience: Option<usize>,
    pub decay_factor: Option<f64>,
    pub min_lr: Option<f64>,
    pub batch_size: Option<usize>,
    pub seed: Option<u64>,
    pub monitor: Option<Monitor>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub source: Option<DatasetSpec>,
    pub target: Option<DatasetSpec>,
    /// `None` selects a 512-512 ReLU MLP over the flattened input.
    pub arch: Option<ArchSpec>,
    /// Shared values; `monitor` here is only used when set explicitly.
    pub train: TrainConfig,
    pub monitor: Option<Monitor>,
    pub pretrain: PhaseOverrides,
    pub finetune: PhaseOverrides,
    pub label_seed: u64,
    /// Class count for random labels; defaults to the source's own.
    pub random_classes: Option<usize>,
    pub rounds: u32,
    pub epochs_per_round: Option<usize>,
    pub seeds: Option<Vec<u64>>,
    pub threshold: f64,
    pub metrics: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            source: None,
            target: None,
            arch: None,
            train: TrainConfig::default(),
            monitor: None,
            pretrain: PhaseOverrides::default(),
            finetune: PhaseOverrides::default(),
            label_seed: 0,
            random_classes: None,
            rounds: 4,
            epochs_per_round: None,
            seeds: None,
            threshold: 0.9,
            metrics: None,
        }
    }
}

impl RunConfig {
    fn phase(&self, o: &PhaseOverrides, default_monitor: Monitor) -> TrainConfig {
        let t = &self.train;
        TrainConfig {
            epochs: o.epochs.unwrap_or(t.epochs),
            initial_lr: o.initial_lr.unwrap_or(t.initial_lr),
            momentum: o.momentum.unwrap_or(t.momentum),
            patience: o.patience.unwrap_or(t.patience),
            decay_factor: o.decay_factor.unwrap_or(t.decay_factor),
            min_lr: o.min_lr.unwrap_or(t.min_lr),
            batch_size: o.batch_size.unwrap_or(t.batch_size),
            seed: o.seed.unwrap_or(t.seed),
            monitor: o.monitor.or(self.monitor).unwrap_or(default_monitor),
        }
    }

    /// Settings for random-label memorization (monitors training loss by default).
    pub fn pretrain_config(&self) -> TrainConfig {
        self.phase(&self.pretrain, Monitor::TrainLoss)
    }

    /// Settings for supervised training on the target (monitors validation accuracy by default).
    pub fn finetune_config(&self) -> TrainConfig {
        self.phase(&self.finetune, Monitor::ValAccuracy)
    }

    pub fn seeds(&self) -> Vec<u64> {
        self.seeds.clone().unwrap_or_else(|| vec![self.train.seed])
    }

    pub fn resolve_arch(&self, sample_shape: &[usize]) -> ArchSpec {
        self.arch.clone().unwrap_or_else(|| default_arch(sample_shape))
    }

    pub fn require_source(&self) -> Result<&DatasetSpec, PersistError> {
        self.source.as_ref().ok_or(PersistError::MissingKey { key: "source.kind".into(), line: None })
    }

    pub fn require_target(&self) -> Result<&DatasetSpec, PersistError> {
        self.target.as_ref().ok_or(PersistError::MissingKey { key: "target.kind".into(), line: None })
    }

    pub fn require_metrics(&self) -> Result<&Path, PersistError> {
        self.metrics.as_deref().ok_or(PersistError::MissingKey { key: "metrics".into(), line: None })
    }

    /// Every setting written out explicitly; parsing the echo yields `self`.
    pub fn echo(&self) -> String {
        let mut out = String::new();
        for (prefix, spec) in [("source", &self.source), ("target", &self.target)] {
            if let Some(s) = spec {
                echo_dataset(&mut out, prefix, s);
            }
        }
        if let Some(a) = &self.arch {
            line(&mut out, "arch", a);
        }
        let t = &self.train;
        line(&mut out, "epochs", t.epochs);
        line(&mut out, "initial_lr", real(t.initial_lr));
        line(&mut out, "momentum", real(t.momentum));
        line(&mut out, "patience", t.patience);
        line(&mut out, "decay_factor", real(t.decay_factor));
        line(&mut out, "min_lr", real(t.min_lr));
        line(&mut out, "batch_size", t.batch_size);
        line(&mut out, "seed", t.seed);
        if let Some(m) = self.monitor {
            line(&mut out, "monitor", m);
        }
        for (prefix, o) in [("pretrain", &self.pretrain), ("finetune", &self.finetune)] {
            let key = |k: &str| format!("{prefix}.{k}");
            if let Some(v) = o.epochs {
                line(&mut out, &key("epochs"), v);
            }
            if let Some(v) = o.initial_lr {
                line(&mut out, &key("initial_lr"), real(v));
            }
            if let Some(v) = o.momentum {
                line(&mut out, &key("momentum"), real(v));
            }
            if let Some(v) = o.patience {
                line(&mut out, &key("patience"), v);
            }
            if let Some(v) = o.decay_factor {
                line(&mut out, &key("decay_factor"), real(v));
            }
            if let Some(v) = o.min_lr {
                line(&mut out, &key("min_lr"), real(v));
            }
            if let Some(v) = o.batch_size {
                line(&mut out, &key("batch_size"), v);
            }
            if let Some(v) = o.seed {
                line(&mut out, &key("seed"), v);
            }
            if let Some(v) = o.monitor {
                line(&mut out, &key("monitor"), v);
            }
        }
        line(&mut out, "label_seed", self.label_seed);
        if let Some(k) = self.random_classes {
            line(&mut out, "random_classes", k);
        }
        line(&mut out, "rounds", self.rounds);
        if let Some(e) = self.epochs_per_round {
            line(&mut out, "epochs_per_round", e);
        }
        if let Some(s) = &self.seeds {
            line(&mut out, "seeds", s.iter().map(u64::to_string).collect::<Vec<_>>().join(","));
        }
        line(&mut out, "threshold", real(self.threshold));
        if let Some(m) = &self.metrics {
            line(&mut out, "metrics", m.display());
        }
        out
    }
}

/// Two hidden ReLU layers of width 512 over the flattened sample.
pub fn default_arch(sample_shape: &[usize]) -> ArchSpec {
    let flat: usize = sample_shape.iter().product();
    let mut arch = ArchSpec::mlp(flat, &[512, 512]);
    if sample_shape.len() > 1 {
        arch.input = sample_shape.to_vec();
        arch.body.insert(0, crate::nn::LayerSpec::Flatten);
    }
    arch
}

fn line(out: &mut String, key: &str, value: impl std::fmt::Display) {
    writeln!(out, "{key} = {value}").expect("write to string");
}

// Shortest text that parses back to the same bits.
fn real(v: f64) -> String {
    format!("{v:?}")
}

fn echo_dataset(out: &mut String, prefix: &str, s: &DatasetSpec) {
    let key = |k: &str| format!("{prefix}.{k}");
    match &s.kind {
        DatasetKind::Idx { images, labels } => {
            line(out, &key("kind"), "idx");
            line(out, &key("images"), images.display());
            line(out, &key("labels"), labels.display());
        }
        DatasetKind::Blobs { n, classes, dim, spread, seed } => {
            line(out, &key("kind"), "blobs");
            line(out, &key("n"), n);
            line(out, &key("classes"), classes);
            line(out, &key("dim"), dim);
            line(out, &key("spread"), real(*spread));
            line(out, &key("seed"), seed);
        }
        DatasetKind::Shapes { n, side, seed } => {
            line(out, &key("kind"), "shapes");
            line(out, &key("n"), n);
            line(out, &key("side"), side);
            line(out, &key("seed"), seed);
        }
    }
    if let Some(n) = s.limit {
        line(out, &key("limit"), n);
    }
    line(out, &key("subset_seed"), s.subset_seed);
    line(out, &key("train_fraction"), real(s.train_fraction));
    line(out, &key("split_seed"), s.split_seed);
}

struct Entries {
    map: BTreeMap<String, (usize, String)>,
    base: PathBuf,
}

impl Entries {
    fn take(&mut self, key: &str) -> Option<(usize, String)> {
        self.map.remove(key)
    }

    fn parse<T: FromStr>(&mut self, key: &str, check: impl Fn(&T) -> Result<(), String>) -> Result<Option<T>, PersistError>
    where
        T::Err: std::fmt::Display,
    {
        let Some((line, text)) = self.take(key) else { return Ok(None) };
        let v = text
            .parse::<T>()
            .map_err(|e| PersistError::Config { line, message: format!("`{key}`: cannot parse `{text}`: {e}") })?;
        check(&v).map_err(|m| PersistError::Config { line, message: format!("`{key}` = {text}: {m}") })?;
        Ok(Some(v))
    }

    fn path(&mut self, key: &str) -> Option<PathBuf> {
        self.take(key).map(|(_, p)| self.base.join(p))
    }
}

fn any(_: &impl Sized) -> Result<(), String> {
    Ok(())
}

fn positive_usize(v: &usize) -> Result<(), String> {
    if *v == 0 { Err("must be positive".into()) } else { Ok(()) }
}

fn positive_real(v: &f64) -> Result<(), String> {
    if v.is_finite() && *v > 0.0 { Ok(()) } else { Err("must be a positive finite number".into()) }
}

fn unit_open(v: &f64) -> Result<(), String> {
    if *v > 0.0 && *v < 1.0 { Ok(()) } else { Err("must lie in (0, 1)".into()) }
}

fn momentum_range(v: &f64) -> Result<(), String> {
    if (0.0..1.0).contains(v) { Ok(()) } else { Err("must lie in [0, 1)".into()) }
}

fn threshold_range(v: &f64) -> Result<(), String> {
    if *v > 0.0 && *v <= 1.0 { Ok(()) } else { Err("must lie in (0, 1]".into()) }
}

struct Seeds(Vec<u64>);

impl FromStr for Seeds {
    type Err = std::num::ParseIntError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.split(',').map(|p| p.trim().parse()).collect::<Result<_, _>>().map(Seeds)
    }
}

fn parse_phase(e: &mut Entries, prefix: &str) -> Result<PhaseOverrides, PersistError> {
    let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    Ok(PhaseOverrides {
        epochs: e.parse(&key("epochs"), any)?,
        initial_lr: e.parse(&key("initial_lr"), positive_real)?,
        momentum: e.parse(&key("momentum"), momentum_range)?,
        patience: e.parse(&key("patience"), positive_usize)?,
        decay_factor: e.parse(&key("decay_factor"), unit_open)?,
        min_lr: e.parse(&key("min_lr"), positive_real)?,
        batch_size: e.parse(&key("batch_size"), positive_usize)?,
        seed: e.parse(&key("seed"), any)?,
        monitor: e.parse(&key("monitor"), any)?,
    })
}

fn parse_dataset(e: &mut Entries, prefix: &str) -> Result<Option<DatasetSpec>, PersistError> {
    let key = |k: &str| format!("{prefix}.{k}");
    let Some((kind_line, kind)) = e.take(&key("kind")) else { return Ok(None) };
    let missing = |k: &str| PersistError::MissingKey { key: key(k), line: Some(kind_line) };
    let kind = match kind.as_str() {
        "idx" => DatasetKind::Idx {
            images: e.path(&key("images")).ok_or_else(|| missing("images"))?,
            labels: e.path(&key("labels")).ok_or_else(|| missing("labels"))?,
        },
        "blobs" => DatasetKind::Blobs {
            n: e.parse(&key("n"), positive_usize)?.ok_or_else(|| missing("n"))?,
            classes: e.parse(&key("classes"), |k: &usize| if *k >= 2 { Ok(()) } else { Err("need at least 2".into()) })?.unwrap_or(10),
            dim: e.parse(&key("dim"), positive_usize)?.unwrap_or(2),
            spread: e.parse(&key("spread"), positive_real)?.unwrap_or(1.0),
            seed: e.parse(&key("seed"), any)?.unwrap_or(0),
        },
        "shapes" => DatasetKind::Shapes {
            n: e.parse(&key("n"), positive_usize)?.ok_or_else(|| missing("n"))?,
            side: e.parse(&key("side"), |s: &usize| if *s >= 8 { Ok(()) } else { Err("must be at least 8".into()) })?.unwrap_or(28),
            seed: e.parse(&key("seed"), any)?.unwrap_or(0),
        },
        other => {
            return Err(PersistError::Config {
                line: kind_line,
                message: format!("`{}`: unknown dataset kind `{other}` (expected idx, blobs or shapes)", key("kind")),
            })
        }
    };
    Ok(Some(DatasetSpec {
        kind,
        limit: e.parse(&key("limit"), positive_usize)?,
        subset_seed: e.parse(&key("subset_seed"), any)?.unwrap_or(0),
        train_fraction: e.parse(&key("train_fraction"), unit_open)?.unwrap_or(0.8),
        split_seed: e.parse(&key("split_seed"), any)?.unwrap_or(0),
    }))
}

/// Parse config text; relative paths resolve against `base`.
pub fn parse_config_str(text: &str, base: &Path) -> Result<RunConfig, PersistError> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (k, v) = content
            .split_once('=')
            .ok_or_else(|| PersistError::Config { line, message: format!("expected `key = value`, found `{content}`") })?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() || v.is_empty() {
            return Err(PersistError::Config { line, message: format!("expected `key = value`, found `{content}`") });
        }
        if let Some((first, _)) = map.insert(k.to_string(), (line, v.to_string())) {
            return Err(PersistError::Config { line, message: format!("`{k}` already set on line {first}") });
        }
    }
    let mut e = Entries { map, base: base.to_path_buf() };
    let shared = parse_phase(&mut e, "")?;
    let defaults = TrainConfig::default();
    let train = TrainConfig {
        epochs: shared.epochs.unwrap_or(defaults.epochs),
        initial_lr: shared.initial_lr.unwrap_or(defaults.initial_lr),
        momentum: shared.momentum.unwrap_or(defaults.momentum),
        patience: shared.patience.unwrap_or(defaults.patience),
        decay_factor: shared.decay_factor.unwrap_or(defaults.decay_factor),
        min_lr: shared.min_lr.unwrap_or(defaults.min_lr),
        batch_size: shared.batch_size.unwrap_or(defaults.batch_size),
        seed: shared.seed.unwrap_or(defaults.seed),
        monitor: defaults.monitor,
    };
    let cfg = RunConfig {
        source: parse_dataset(&mut e, "source")?,
        target: parse_dataset(&mut e, "target")?,
        arch: e.parse("arch", any)?,
        train,
        monitor: shared.monitor,
        pretrain: parse_phase(&mut e, "pretrain")?,
        finetune: parse_phase(&mut e, "finetune")?,
        label_seed: e.parse("label_seed", any)?.unwrap_or(0),
        random_classes: e.parse("random_classes", |k: &usize| if *k >= 2 { Ok(()) } else { Err("need at least 2".into()) })?,
        rounds: e.parse("rounds", |r: &u32| if *r >= 1 { Ok(()) } else { Err("must be positive".into()) })?.unwrap_or(4),
        epochs_per_round: e.parse("epochs_per_round", positive_usize)?,
        seeds: e.parse::<Seeds>("seeds", |s| if s.0.is_empty() { Err("empty list".into()) } else { Ok(()) })?.map(|s| s.0),
        threshold: e.parse("threshold", threshold_range)?.unwrap_or(0.9),
        metrics: e.path("metrics"),
    };
    if let Some((key, (line, _))) = e.map.into_iter().min_by_key(|(_, (line, _))| *line) {
        return Err(PersistError::Config { line, message: format!("unknown key `{key}`") });
    }
    if cfg.source.is_none() && cfg.target.is_none() && cfg.metrics.is_none() {
        return Err(PersistError::MissingKey { key: "source.kind or target.kind".into(), line: None });
    }
    Ok(cfg)
}

pub fn parse_config(path: impl AsRef<Path>) -> Result<RunConfig, PersistError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| PersistError::io(path, e))?;
    // absolute, so an echoed config works from any directory
    let base = std::path::absolute(path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new(".")))
        .map_err(|e| PersistError::io(path, e))?;
    parse_config_str(&text, &base)
}
