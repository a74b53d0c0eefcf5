//! Train through two label reshuffles on blobs and write the curves as SVG.
//!
//! `cargo run --example plot -- [out.svg]`

use memlab::cli::emit_svg;
use memlab::data::synth_blobs;
use memlab::nn::{ArchSpec, TrainConfig};
use memlab::persist::write_metrics_csv;
use memlab::protocol::reshuffle_experiment;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "curves.svg".into());
    let data = synth_blobs(64, 5, 8, 1.0, 2)?;
    let cfg = TrainConfig { seed: 2, ..TrainConfig::default() };
    let run = reshuffle_experiment(&data, &ArchSpec::mlp(8, &[64, 64]), &cfg, 3, 40, 2)?;
    emit_svg(&run.log, &out)?;
    let csv = std::path::Path::new(&out).with_extension("csv");
    write_metrics_csv(&run.log, &csv)?;
    println!("wrote {out} and {}", csv.display());
    Ok(())
}
