//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run everything with `cargo test --release --test acceptance`, or pass
//! criterion numbers to run a subset: `cargo test --test acceptance -- 1 7`.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use memlab::cli::dispatch;
use memlab::data::{
    assign_random_labels, decode_idx, derive_seed, encode_idx_images, encode_idx_labels, load_idx, split, synth_shapes,
    DataError, Dataset, Labeling, Prng, SplitSpec,
};
use memlab::nn::{grad_check, ArchSpec, Mode, Network, PlateauScheduler, Tensor, TrainConfig};
use memlab::persist::{decode_checkpoint, encode_checkpoint, parse_config_str, render_metrics_csv, PersistError};
use memlab::protocol::{
    compare_transfer, epochs_to_threshold, init_network, reshuffle_experiment, train, Checkpoint, ReshuffleRun, Split,
};

const SEEDS: [u64; 5] = [1, 2, 3, 4, 5];
const GRAD_TOL: f64 = 1e-4;
const MEMORIZE_SAMPLES: usize = 128;
const MEMORIZE_EPOCHS: usize = 500;
const MEMORIZE_ACC: f64 = 0.99;
const RESHUFFLE_ROUNDS: u32 = 4;
const EPOCHS_PER_ROUND: usize = 50;
const RESHUFFLE_THRESHOLD: f64 = 0.9;
const SOURCE_SAMPLES: usize = 10_000;
const TARGET_SAMPLES: usize = 1_000;
const TARGET_VAL_SAMPLES: usize = 1_000;
const TRANSFER_PRETRAIN_EPOCHS: usize = 50;
const TRANSFER_FINETUNE_EPOCHS: usize = 50;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn digits() -> Dataset {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("testdata");
    load_idx(dir.join("digits5k-images-idx3-ubyte.gz"), dir.join("digits5k-labels-idx1-ubyte.gz")).unwrap()
}

fn memorization_set() -> Dataset {
    digits().take_random(MEMORIZE_SAMPLES, 0).unwrap()
}

fn mlp() -> ArchSpec {
    ArchSpec::mlp(784, &[512, 512])
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 }
}

fn gradients() -> Outcome {
    let mut rng = Prng::new(2024);
    let mut worst = BTreeMap::new();
    let mut pass = true;
    for kind in ["dense", "relu", "conv", "maxpool", "flatten"] {
        let mut max_err = 0.0f64;
        for _ in 0..20 {
            let pick = |rng: &mut Prng, lo: u64, hi: u64| (lo + rng.below(hi - lo + 1)) as usize;
            let (arch, input) = match kind {
                "dense" => {
                    let (i, h) = (pick(&mut rng, 1, 8), pick(&mut rng, 1, 10));
                    (format!("in:{i} dense:{h}"), vec![pick(&mut rng, 1, 4), i])
                }
                "relu" => {
                    let (i, h) = (pick(&mut rng, 1, 8), pick(&mut rng, 1, 10));
                    (format!("in:{i} dense:{h} relu"), vec![pick(&mut rng, 1, 4), i])
                }
                "conv" => {
                    let (c, oc, k) = (pick(&mut rng, 1, 2), pick(&mut rng, 1, 3), pick(&mut rng, 1, 3));
                    let (s, p, side) = (pick(&mut rng, 1, 2), pick(&mut rng, 0, 1), k + pick(&mut rng, 0, 3));
                    (format!("in:{c}x{side}x{side} conv:{oc},{k},{s},{p} flatten"), vec![2, c, side, side])
                }
                "maxpool" => {
                    let (c, k, s) = (pick(&mut rng, 1, 2), pick(&mut rng, 1, 2), pick(&mut rng, 1, 2));
                    let side = k + pick(&mut rng, 1, 4);
                    (format!("in:{c}x{side}x{side} maxpool:{k},{s} flatten"), vec![2, c, side, side])
                }
                _ => {
                    let (c, h, w) = (pick(&mut rng, 1, 2), pick(&mut rng, 1, 4), pick(&mut rng, 1, 4));
                    (format!("in:{c}x{h}x{w} flatten dense:3"), vec![2, c, h, w])
                }
            };
            let classes = pick(&mut rng, 2, 4);
            let seed = rng.next_u64();
            let mut net = Network::new(&arch.parse().unwrap(), classes, seed, seed ^ 1).unwrap();
            let n: usize = input.iter().product();
            let x = Tensor::new(input.clone(), (0..n).map(|_| rng.normal()).collect()).unwrap();
            let labels: Vec<usize> = (0..input[0]).map(|_| rng.below(classes as u64) as usize).collect();
            let err = grad_check(&mut net, &x, &labels, 1e-5).unwrap();
            max_err = max_err.max(err);
        }
        pass &= max_err < GRAD_TOL;
        worst.insert(kind, max_err);
    }
    let detail = worst.iter().map(|(k, e)| format!("{k} {e:.1e}")).collect::<Vec<_>>().join(", ");
    outcome(pass, format!("max relative error over 20 instances each: {detail} (limit {GRAD_TOL:.0e})"))
}

fn memorization() -> Outcome {
    let d = memorization_set();
    let mut reached = Vec::new();
    for seed in SEEDS {
        let labeled = assign_random_labels(&d, derive_seed(seed, 4));
        let mut net = init_network(&mlp(), 10, seed).unwrap();
        let cfg = TrainConfig { epochs: MEMORIZE_EPOCHS, seed, ..TrainConfig::default() };
        let run = train(&mut net, &labeled, None, &cfg).unwrap();
        reached.push(epochs_to_threshold(&run.log, 1, MEMORIZE_ACC).unwrap());
    }
    let hits = reached.iter().filter(|r| r.is_some()).count();
    let shown: Vec<String> = reached.iter().map(|r| r.map_or("never".into(), |e| e.to_string())).collect();
    outcome(hits >= 4, format!("train accuracy >= {MEMORIZE_ACC} reached in {hits}/5 seeds, at epochs [{}]", shown.join(", ")))
}

fn reshuffle_runs() -> Vec<ReshuffleRun> {
    let d = memorization_set();
    SEEDS
        .iter()
        .map(|&seed| {
            let cfg = TrainConfig { seed, ..TrainConfig::default() };
            reshuffle_experiment(&d, &mlp(), &cfg, RESHUFFLE_ROUNDS, EPOCHS_PER_ROUND, seed).unwrap()
        })
        .collect()
}

fn reshuffle_speedup(runs: &[ReshuffleRun]) -> Outcome {
    // a round that never reaches the threshold counts as one epoch past the budget
    let medians: Vec<f64> = (1..=RESHUFFLE_ROUNDS)
        .map(|round| {
            median(
                runs.iter()
                    .map(|r| epochs_to_threshold(&r.log, round, RESHUFFLE_THRESHOLD).unwrap().unwrap_or(EPOCHS_PER_ROUND + 1) as f64)
                    .collect(),
            )
        })
        .collect();
    let per_seed: Vec<String> = runs
        .iter()
        .map(|r| {
            let e: Vec<String> = (1..=RESHUFFLE_ROUNDS)
                .map(|round| epochs_to_threshold(&r.log, round, RESHUFFLE_THRESHOLD).unwrap().map_or("-".into(), |e| e.to_string()))
                .collect();
            format!("[{}]", e.join(","))
        })
        .collect();
    let pass = medians[1] < medians[0] && medians[1..].iter().all(|&m| m <= medians[0]);
    let shown: Vec<String> = medians.iter().map(|m| format!("{m}")).collect();
    outcome(pass, format!("median epochs to {RESHUFFLE_THRESHOLD} by round: {}; per seed {}", shown.join(" / "), per_seed.join(" ")))
}

fn chance_reset(runs: &[ReshuffleRun]) -> Outcome {
    let n = MEMORIZE_SAMPLES as f64;
    let bound = 3.0 * (0.1f64 * 0.9 / n).sqrt();
    let mut worst = 0.0f64;
    for r in runs {
        for s in &r.round_starts {
            worst = worst.max((s.accuracy - 0.1).abs());
        }
    }
    let count = runs.iter().map(|r| r.round_starts.len()).sum::<usize>();
    outcome(worst < bound, format!("largest deviation from 1/10 over {count} round starts: {worst:.4} (3 SE = {bound:.4})"))
}

fn transfer() -> Outcome {
    let source = synth_shapes(SOURCE_SAMPLES, 28, 0).unwrap();
    let pool = digits().take_random(TARGET_SAMPLES + TARGET_VAL_SAMPLES, 0).unwrap();
    let fraction = TARGET_SAMPLES as f64 / (TARGET_SAMPLES + TARGET_VAL_SAMPLES) as f64;
    let (tt, tv) = split(&pool, SplitSpec { train_fraction: fraction, seed: 0 }).unwrap();
    let pre = TrainConfig { epochs: TRANSFER_PRETRAIN_EPOCHS, ..TrainConfig::default() };
    let ft = TrainConfig { epochs: TRANSFER_FINETUNE_EPOCHS, ..TrainConfig::default() };
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    let report = compare_transfer(&source, &tt, &tv, &mlp(), &pre, &ft, &SEEDS, threads).unwrap();
    let diffs: Vec<String> = report.pairs.iter().map(|p| format!("{:+.1}", 100.0 * p.difference())).collect();
    let pass = report.wins() >= 3 && report.mean_difference > 0.0;
    println!("{}", report.table());
    outcome(
        pass,
        format!(
            "pre-trained >= baseline on {}/5 seeds, mean difference {:+.2} pp (per seed {})",
            report.wins(),
            100.0 * report.mean_difference,
            diffs.join(" ")
        ),
    )
}

fn paired_anchor() -> Outcome {
    let source = synth_shapes(500, 28, 1).unwrap();
    let pool = digits().take_random(400, 1).unwrap();
    let (tt, tv) = split(&pool, SplitSpec { train_fraction: 0.5, seed: 1 }).unwrap();
    let arch = ArchSpec::mlp(784, &[64]);
    let pre = TrainConfig { epochs: 0, ..TrainConfig::default() };
    let ft = TrainConfig { epochs: 15, ..TrainConfig::default() };
    let report = compare_transfer(&source, &tt, &tv, &arch, &pre, &ft, &SEEDS, 1).unwrap();
    let identical = report
        .pairs
        .iter()
        .filter(|p| render_metrics_csv(&p.baseline.log).unwrap() == render_metrics_csv(&p.pretrained.log).unwrap())
        .count();
    outcome(
        identical == 5 && report.mean_difference == 0.0,
        format!("{identical}/5 pairs byte-identical, mean difference {:e}", report.mean_difference),
    )
}

fn scheduler() -> Outcome {
    // hand trace: epoch 1 sets the best, epochs 2..=11 count 1..=10, epoch 12
    // counts 11 > 10 and decays; after each reset the next decay is 11 epochs on
    let expected = |epoch: usize| -> f64 {
        match epoch {
            0..=11 => 0.1,
            12..=22 => 0.01,
            23..=33 => 0.001,
            34..=44 => 1e-4,
            _ => 1e-5,
        }
    };
    let mut s = PlateauScheduler::new(0.1, 10, 0.1, 1e-5, Mode::Minimize).unwrap();
    let mut decays = Vec::new();
    let mut lr = 0.1;
    let mut ok = true;
    for epoch in 1..=70 {
        let next = s.step(0.5).unwrap();
        ok &= ((next - expected(epoch)) / expected(epoch)).abs() < 1e-12;
        // at the floor the clamp can shave off rounding error; that is not a decay
        if next < lr * (1.0 - 1e-9) {
            decays.push(epoch);
        }
        lr = next;
    }
    ok &= decays == [12, 23, 34, 45];

    // the same trace inside a training run: one class, so validation accuracy is constant
    let d = synth_shapes(40, 12, 5).unwrap();
    let one = d.relabeled(vec![0; d.len()], 1, Labeling::True).unwrap();
    let mut net = init_network(&ArchSpec::mlp(144, &[8]), 1, 0).unwrap();
    let cfg = TrainConfig { epochs: 30, monitor: memlab::nn::Monitor::ValAccuracy, ..TrainConfig::default() };
    let run = train(&mut net, &one, Some(&one), &cfg).unwrap();
    // the lr logged for epoch e is the one produced after epoch e-1
    let logged_ok = run
        .log
        .split_records(1, Split::Train)
        .all(|r| ((r.lr - expected(r.epoch - 1)) / expected(r.epoch - 1)).abs() < 1e-12);
    outcome(ok && logged_ok, format!("decays at epochs {decays:?} (expected [12, 23, 34, 45]); training log agrees: {logged_ok}"))
}

fn determinism_and_persistence() -> Outcome {
    let mut failures = Vec::new();
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "source.kind = shapes\nsource.n = 200\nsource.side = 12\narch = in:1x12x12 flatten dense:32 relu\nepochs = 6\nseed = 3\n")
        .unwrap();
    let outs: Vec<_> = (0..2).map(|i| dir.path().join(format!("run{i}"))).collect();
    for out in &outs {
        let code = dispatch(["memlab", "reshuffle", "--config", cfg.to_str().unwrap(), "--rounds", "2", "--out", out.to_str().unwrap()]);
        if code != 0 {
            failures.push(format!("reshuffle exited {code}"));
        }
    }
    let read = |p: &PathBuf| std::fs::read(p.join("metrics.csv")).unwrap_or_default();
    if read(&outs[0]).is_empty() || read(&outs[0]) != read(&outs[1]) {
        failures.push("metrics CSV differs between identical runs".into());
    }

    let net = Network::new(&"in:1x8x8 conv:3,3,1,1 relu maxpool:2,2 flatten dense:10 relu".parse().unwrap(), 4, 8, 9).unwrap();
    let mut prov = BTreeMap::new();
    prov.insert("labeling".to_string(), "random:12".to_string());
    let c = Checkpoint::from_network(&net, prov);
    let bytes = encode_checkpoint(&c).unwrap();
    let back = decode_checkpoint(&bytes).unwrap();
    let exact = back.provenance == c.provenance
        && back.params.iter().zip(&c.params).all(|(a, b)| {
            a.shape() == b.shape() && a.data().iter().zip(b.data()).all(|(x, y)| x.to_bits() == y.to_bits())
        });
    if !exact {
        failures.push("checkpoint round trip not bit-exact".into());
    }

    let mut bad = bytes.clone();
    bad[..4].copy_from_slice(b"XXXX");
    if !matches!(decode_checkpoint(&bad), Err(PersistError::BadMagic)) {
        failures.push("bad checkpoint magic not rejected as BadMagic".into());
    }
    let mut bad = bytes.clone();
    bad[4] = 9;
    if !matches!(decode_checkpoint(&bad), Err(PersistError::UnsupportedVersion(9))) {
        failures.push("unknown checkpoint version not rejected".into());
    }
    if !matches!(decode_checkpoint(&bytes[..bytes.len() - 8]), Err(PersistError::Truncated { .. })) {
        failures.push("truncated checkpoint not rejected as Truncated".into());
    }

    let images = encode_idx_images(2, 2, 2, &[0, 255, 0, 255, 1, 2, 3, 4]);
    let labels = encode_idx_labels(&[0, 1]);
    let mut bad_magic = images.clone();
    bad_magic[3] = 0x01;
    if !matches!(decode_idx(&bad_magic, &labels), Err(DataError::BadMagic { .. })) {
        failures.push("IDX bad magic not rejected".into());
    }
    if !matches!(decode_idx(&images[..images.len() - 1], &labels), Err(DataError::Truncated { .. })) {
        failures.push("IDX truncation not rejected".into());
    }
    if !matches!(decode_idx(&images, &encode_idx_labels(&[0, 1, 2])), Err(DataError::CountMismatch { .. })) {
        failures.push("IDX count mismatch not rejected".into());
    }

    let base = std::path::Path::new("/");
    let head = "source.kind = blobs\nsource.n = 20\n";
    if !matches!(parse_config_str(&format!("{head}patiense = 10\n"), base), Err(PersistError::Config { line: 3, .. })) {
        failures.push("unknown config key not reported at line 3".into());
    }
    if !matches!(parse_config_str(&format!("{head}momentum = 1.5\n"), base), Err(PersistError::Config { line: 3, .. })) {
        failures.push("out-of-range momentum not reported at line 3".into());
    }
    if !matches!(parse_config_str("source.kind = idx\n", base), Err(PersistError::MissingKey { .. })) {
        failures.push("missing idx paths not reported".into());
    }

    let pass = failures.is_empty();
    let detail = if pass {
        "identical runs byte-identical; checkpoint bit-exact; IDX, checkpoint and config errors typed".to_string()
    } else {
        failures.join("; ")
    };
    outcome(pass, detail)
}

fn main() {
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let wanted = |n: u32| selected.is_empty() || selected.contains(&n);
    let mut results: Vec<(u32, &str, Outcome, f64)> = Vec::new();
    let mut record = |n: u32, name: &'static str, f: &mut dyn FnMut() -> Outcome| {
        if wanted(n) {
            let t = Instant::now();
            let o = f();
            let secs = t.elapsed().as_secs_f64();
            println!("criterion {n} {name}: {} ({secs:.0}s) {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
            results.push((n, name, o, secs));
        }
    };
    record(1, "gradient correctness", &mut gradients);
    record(2, "memorization capacity", &mut memorization);
    if wanted(3) || wanted(4) {
        let runs = reshuffle_runs();
        record(3, "reshuffle speedup", &mut || reshuffle_speedup(&runs));
        record(4, "chance reset", &mut || chance_reset(&runs));
    }
    record(5, "transfer direction", &mut transfer);
    record(6, "paired-run anchor", &mut paired_anchor);
    record(7, "scheduler semantics", &mut scheduler);
    record(8, "determinism and persistence", &mut determinism_and_persistence);

    println!();
    println!("acceptance summary");
    for (n, name, o, _) in &results {
        println!("  {n}. {name:<30} {}", if o.pass { "PASS" } else { "FAIL" });
    }
    let failed = results.iter().filter(|r| !r.2.pass).count();
    println!("{} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
