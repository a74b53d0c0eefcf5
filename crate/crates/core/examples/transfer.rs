//! Paired comparison: random-label pre-training on synthetic shapes versus
//! training from scratch on digits, same seed for both arms.
//!
//! `cargo run --release --example transfer -- [pretrain_epochs] [finetune_epochs] [seeds]`

use memlab::data::{load_idx, split, synth_shapes, SplitSpec};
use memlab::nn::{ArchSpec, TrainConfig};
use memlab::protocol::compare_transfer;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let pre_epochs: usize = args.first().map_or(Ok(3), |s| s.parse())?;
    let ft_epochs: usize = args.get(1).map_or(Ok(10), |s| s.parse())?;
    let seeds: u64 = args.get(2).map_or(Ok(2), |s| s.parse())?;

    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/testdata/");
    let digits = load_idx(format!("{dir}digits5k-images-idx3-ubyte.gz"), format!("{dir}digits5k-labels-idx1-ubyte.gz"))?;
    let (target_train, target_val) = split(&digits.take_random(1000, 0)?, SplitSpec { train_fraction: 0.5, seed: 0 })?;
    let source = synth_shapes(2000, 28, 0)?;

    let arch = ArchSpec::mlp(784, &[256, 256]);
    let pre = TrainConfig { epochs: pre_epochs, ..TrainConfig::default() };
    let ft = TrainConfig { epochs: ft_epochs, ..TrainConfig::default() };
    let seeds: Vec<u64> = (1..=seeds).collect();
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    let report = compare_transfer(&source, &target_train, &target_val, &arch, &pre, &ft, &seeds, threads)?;
    print!("{}", report.table());
    Ok(())
}
