use super::{NnError, Tensor};
use crate::data::Prng;

/// He-normal weights: zero-mean Gaussian with variance `2 / fan_in`.
pub fn he_init(shape: &[usize], fan_in: usize, rng: &mut Prng) -> Result<Tensor, NnError> {
    if fan_in == 0 {
        return Err(NnError::InvalidArgument("fan_in must be positive".into()));
    }
    let mut t = Tensor::zeros(shape.to_vec())?;
    let std = (2.0 / fan_in as f64).sqrt();
    for v in t.data_mut() {
        *v = std * rng.normal();
    }
    Ok(t)
}

/// Bias vector of exact zeros.
pub fn zero_bias(width: usize) -> Result<Tensor, NnError> {
    Tensor::zeros(vec![width])
}
