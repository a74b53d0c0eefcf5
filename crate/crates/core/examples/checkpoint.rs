//! Save a trained network, load it back and confirm identical predictions.

use std::collections::BTreeMap;

use memlab::data::synth_blobs;
use memlab::nn::{ArchSpec, TrainConfig};
use memlab::persist::{load_checkpoint, save_checkpoint};
use memlab::protocol::{evaluate, init_network, train};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = synth_blobs(300, 4, 2, 0.3, 5)?;
    let mut net = init_network(&ArchSpec::mlp(2, &[16]), 4, 5)?;
    let run = train(&mut net, &data, None, &TrainConfig { epochs: 20, ..TrainConfig::default() })?;

    let dir = std::env::temp_dir().join("memlab-checkpoint-example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("blobs.ckpt");
    let mut ckpt = run.checkpoint.clone();
    ckpt.provenance.extend(BTreeMap::from([("note".to_string(), "blobs example".to_string())]));
    save_checkpoint(&ckpt, &path)?;

    let loaded = load_checkpoint(&path)?;
    let mut restored = loaded.to_network()?;
    let before = evaluate(&mut net, &data)?;
    let after = evaluate(&mut restored, &data)?;
    println!("saved {} ({} bytes)", path.display(), std::fs::metadata(&path)?.len());
    println!("descriptor  {}", loaded.descriptor());
    for (k, v) in &loaded.provenance {
        println!("  {k} = {v}");
    }
    println!("loss/accuracy before {before:?}, after {after:?}");
    assert_eq!(before.0.to_bits(), after.0.to_bits());
    Ok(())
}
