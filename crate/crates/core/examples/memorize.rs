//! Fit random labels on a small digit subset and print the learning curve.
//!
//! `cargo run --release --example memorize -- [samples] [epochs] [seed]`

use memlab::data::{assign_random_labels, derive_seed, load_idx};
use memlab::nn::{ArchSpec, TrainConfig};
use memlab::protocol::{epochs_to_threshold, init_network, train, Split};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let samples: usize = args.first().map_or(Ok(128), |s| s.parse())?;
    let epochs: usize = args.get(1).map_or(Ok(100), |s| s.parse())?;
    let seed: u64 = args.get(2).map_or(Ok(1), |s| s.parse())?;

    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/testdata/");
    let digits = load_idx(format!("{dir}digits5k-images-idx3-ubyte.gz"), format!("{dir}digits5k-labels-idx1-ubyte.gz"))?;
    let subset = digits.take_random(samples, 0)?;
    let noise = assign_random_labels(&subset, derive_seed(seed, 4));

    let arch = ArchSpec::mlp(784, &[512, 512]);
    let mut net = init_network(&arch, 10, seed)?;
    let cfg = TrainConfig { epochs, seed, ..TrainConfig::default() };
    let run = train(&mut net, &noise, None, &cfg)?;

    println!("epoch  loss       accuracy  lr");
    for r in run.log.split_records(1, Split::Train) {
        if r.epoch % 10 == 0 || r.epoch <= 5 {
            println!("{:>5}  {:<9.5}  {:<8.4}  {}", r.epoch, r.loss, r.accuracy, r.lr);
        }
    }
    match epochs_to_threshold(&run.log, 1, 0.99)? {
        Some(e) => println!("random labels memorized (>= 0.99) after {e} epochs"),
        None => println!("not memorized within {epochs} epochs"),
    }
    Ok(())
}
