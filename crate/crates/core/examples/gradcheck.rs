//! Finite-difference gradient check of a small conv net, layer by layer.

use memlab::data::Prng;
use memlab::nn::{grad_check, Network, Tensor};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let archs = [
        "in:5 dense:7",
        "in:5 dense:7 relu dense:4",
        "in:2x7x7 conv:3,3,1,1 flatten",
        "in:2x7x7 conv:3,3,2,0 relu maxpool:2,1 flatten dense:6",
    ];
    let mut rng = Prng::new(7);
    for arch in archs {
        let spec: memlab::nn::ArchSpec = arch.parse()?;
        let mut net = Network::new(&spec, 3, 1, 2)?;
        let mut shape = vec![4];
        shape.extend(&spec.input);
        let n = shape.iter().product();
        let x = Tensor::new(shape, (0..n).map(|_| rng.normal()).collect())?;
        let labels: Vec<usize> = (0..4).map(|_| rng.below(3) as usize).collect();
        let err = grad_check(&mut net, &x, &labels, 1e-5)?;
        println!("{arch:<55} max relative error {err:.2e}");
    }
    Ok(())
}
