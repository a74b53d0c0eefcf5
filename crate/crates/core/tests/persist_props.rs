use std::collections::BTreeMap;
use std::path::Path;

use memlab::nn::{ArchSpec, Network};
use memlab::persist::{
    decode_checkpoint, encode_checkpoint, format_sig9, load_checkpoint, parse_config_str, parse_metrics_csv,
    render_metrics_csv, save_checkpoint, PersistError,
};
use memlab::protocol::{Checkpoint, EpochRecord, MetricsLog, Split};
use proptest::prelude::*;

// Nine significant digits by way of scientific notation, then the decimal
// point moved by the exponent.
fn sig9_oracle(v: f64) -> String {
    let sci = format!("{:.8e}", v.abs());
    let (mantissa, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    let body = if exp < 0 {
        format!("0.{}{}", "0".repeat((-exp - 1) as usize), digits)
    } else if exp >= 8 {
        format!("{}{}", digits, "0".repeat((exp - 8) as usize))
    } else {
        let point = (exp + 1) as usize;
        format!("{}.{}", &digits[..point], &digits[point..])
    };
    if v < 0.0 { format!("-{body}") } else { body }
}

#[test]
fn oracle_agrees_on_the_worked_example() {
    assert_eq!(sig9_oracle(2.302585094), "2.30258509");
    assert_eq!(sig9_oracle(0.1), "0.100000000");
}

fn arch_strategy() -> impl Strategy<Value = ArchSpec> {
    prop_oneof![
        (1usize..20, prop::collection::vec(1usize..16, 0..3)).prop_map(|(i, h)| ArchSpec::mlp(i, &h)),
        (1usize..3, 1usize..4, 1usize..3).prop_map(|(c, oc, k)| {
            format!("in:{c}x6x6 conv:{oc},{k},1,1 relu maxpool:2,2 flatten").parse().unwrap()
        }),
    ]
}

fn record(round: u32, epoch: usize, split: Split, loss: f64, accuracy: f64, lr: f64) -> EpochRecord {
    EpochRecord { round, epoch, split, loss, accuracy, lr }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 128, ..ProptestConfig::default() })]

    #[test]
    fn sig9_matches_oracle(mantissa in 1.0f64..10.0, exp in -7i32..9, negative in any::<bool>()) {
        let v = mantissa * 10f64.powi(exp) * if negative { -1.0 } else { 1.0 };
        prop_assert_eq!(format_sig9(v).unwrap(), sig9_oracle(v));
    }

    #[test]
    fn sig9_matches_oracle_on_probabilities(v in 0.0f64..1.0) {
        prop_assume!(v > 0.0);
        prop_assert_eq!(format_sig9(v).unwrap(), sig9_oracle(v));
    }

    #[test]
    fn checkpoint_round_trip_is_bit_exact(
        arch in arch_strategy(),
        classes in 2usize..6,
        seed in any::<u64>(),
        prov in prop::collection::btree_map("[a-z_]{1,8}", "[ -~]{0,20}", 0..5),
    ) {
        let net = Network::new(&arch, classes, seed, !seed).unwrap();
        let c = Checkpoint::from_network(&net, prov);
        let bytes = encode_checkpoint(&c).unwrap();
        let back = decode_checkpoint(&bytes).unwrap();
        prop_assert_eq!(&back.provenance, &c.provenance);
        prop_assert_eq!(back.descriptor(), c.descriptor());
        for (a, b) in back.params.iter().zip(&c.params) {
            prop_assert_eq!(a.shape(), b.shape());
            prop_assert!(a.data().iter().zip(b.data()).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
        prop_assert_eq!(encode_checkpoint(&back).unwrap(), bytes);
    }

    #[test]
    fn truncated_checkpoints_never_load(cut_frac in 0.0f64..1.0, seed in any::<u64>()) {
        let net = Network::new(&ArchSpec::mlp(4, &[3]), 2, seed, seed).unwrap();
        let bytes = encode_checkpoint(&Checkpoint::from_network(&net, BTreeMap::new())).unwrap();
        let cut = ((bytes.len() as f64) * cut_frac) as usize;
        prop_assert!(decode_checkpoint(&bytes[..cut]).is_err());
    }

    #[test]
    fn csv_is_stable_under_reparse(rows in prop::collection::vec((0.0f64..10.0, 0.0f64..=1.0, 1e-6f64..1.0), 1..30)) {
        let mut log = MetricsLog::default();
        for (i, (loss, acc, lr)) in rows.iter().enumerate() {
            log.push(record(1, i + 1, Split::Train, *loss, *acc, *lr)).unwrap();
            log.push(record(1, i + 1, Split::Val, *loss, *acc, *lr)).unwrap();
        }
        let text = render_metrics_csv(&log).unwrap();
        prop_assert_eq!(text.lines().count(), 1 + 2 * rows.len());
        prop_assert!(!text.contains('\r'));
        prop_assert_eq!(render_metrics_csv(&parse_metrics_csv(&text).unwrap()).unwrap(), text);
    }

    #[test]
    fn config_echo_round_trips(
        epochs in 0usize..500,
        lr in 1e-6f64..2.0,
        momentum in 0.0f64..0.999,
        patience in 1usize..50,
        decay in 0.01f64..0.99,
        batch in 1usize..256,
        seed in any::<u64>(),
        seeds in prop::collection::vec(any::<u64>(), 1..6),
    ) {
        let text = format!(
            "source.kind = shapes\nsource.n = 40\nepochs = {epochs}\ninitial_lr = {lr:?}\nmomentum = {momentum:?}\n\
             patience = {patience}\ndecay_factor = {decay:?}\nbatch_size = {batch}\nseed = {seed}\nseeds = {}\n",
            seeds.iter().map(u64::to_string).collect::<Vec<_>>().join(",")
        );
        let c = parse_config_str(&text, Path::new("/")).unwrap();
        prop_assert_eq!(c.train.initial_lr.to_bits(), lr.to_bits());
        prop_assert_eq!(c.seeds(), seeds);
        prop_assert_eq!(parse_config_str(&c.echo(), Path::new("/elsewhere")).unwrap(), c);
    }

    #[test]
    fn unknown_key_is_reported_at_its_line(blank_lines in 0usize..6, key in "[a-z]{3,10}x") {
        let text = format!("source.kind = blobs\nsource.n = 20\n{}{key} = 1\n", "# note\n".repeat(blank_lines));
        match parse_config_str(&text, Path::new("/")) {
            Err(PersistError::Config { line, message }) => {
                prop_assert_eq!(line, 3 + blank_lines);
                prop_assert!(message.contains(&key));
            }
            other => prop_assert!(false, "{other:?}"),
        }
    }
}

#[test]
fn checkpoint_file_round_trip_and_typed_errors() {
    let dir = tempfile::tempdir().unwrap();
    let net = Network::new(&ArchSpec::mlp(5, &[4]), 3, 1, 2).unwrap();
    let mut prov = BTreeMap::new();
    prov.insert("labeling".to_string(), "random:9".to_string());
    let c = Checkpoint::from_network(&net, prov);
    let path = dir.path().join("a.ckpt");
    save_checkpoint(&c, &path).unwrap();
    assert_eq!(load_checkpoint(&path).unwrap(), c);

    let bytes = std::fs::read(&path).unwrap();
    let mut bad = bytes.clone();
    bad[..4].copy_from_slice(b"XXXX");
    std::fs::write(&path, &bad).unwrap();
    assert!(matches!(load_checkpoint(&path), Err(PersistError::BadMagic)));
    std::fs::write(&path, &bytes[..bytes.len() - 8]).unwrap();
    assert!(matches!(load_checkpoint(&path), Err(PersistError::Truncated { .. })));
    assert!(matches!(load_checkpoint(dir.path().join("missing")), Err(PersistError::Io { .. })));
}

#[test]
fn non_finite_metrics_are_refused() {
    let log = MetricsLog::from_records(vec![record(1, 1, Split::Train, 1.0, 0.5, 0.1)]).unwrap();
    assert!(render_metrics_csv(&log).is_ok());
    for bad in [f64::NAN, f64::INFINITY, f64::NEG_INFINITY] {
        assert!(format_sig9(bad).is_err());
        assert!(MetricsLog::from_records(vec![record(1, 1, Split::Train, bad, 0.5, 0.1)]).is_err());
        assert!(MetricsLog::from_records(vec![record(1, 1, Split::Train, 1.0, 0.5, bad)]).is_err());
    }
}
