//! Memorize, reshuffle the labels, memorize again. Prints per-round speed.
//!
//! `cargo run --release --example reshuffle -- [rounds] [epochs_per_round] [seed]`

use memlab::data::load_idx;
use memlab::nn::{ArchSpec, TrainConfig};
use memlab::protocol::{epochs_to_threshold, reshuffle_experiment};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let rounds: u32 = args.first().map_or(Ok(3), |s| s.parse())?;
    let per_round: usize = args.get(1).map_or(Ok(30), |s| s.parse())?;
    let seed: u64 = args.get(2).map_or(Ok(1), |s| s.parse())?;

    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/testdata/");
    let digits = load_idx(format!("{dir}digits5k-images-idx3-ubyte.gz"), format!("{dir}digits5k-labels-idx1-ubyte.gz"))?;
    let subset = digits.take_random(128, 0)?;

    let arch = ArchSpec::mlp(784, &[512, 512]);
    let cfg = TrainConfig { seed, ..TrainConfig::default() };
    let run = reshuffle_experiment(&subset, &arch, &cfg, rounds, per_round, seed)?;

    println!("round  labels                      start acc  epochs to 0.9");
    for start in &run.round_starts {
        let labeling = run.log.labeling(start.round).map(|l| l.to_string()).unwrap_or_default();
        let reached = epochs_to_threshold(&run.log, start.round, 0.9)?.map_or("-".to_string(), |e| e.to_string());
        println!("{:>5}  {:<26}  {:>9.4}  {:>13}", start.round, labeling, start.accuracy, reached);
    }
    Ok(())
}
