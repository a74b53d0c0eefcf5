use super::loss::softmax_cross_entropy;
use super::{Network, NnError, Tensor};
use crate::data::Prng;

/// Networks with more parameters than this are checked on a random subsample.
const FULL_CHECK_LIMIT: usize = 4096;
const SUBSAMPLE: usize = 256;
const SUBSAMPLE_SEED: u64 = 0x6772_6164;

/// Maximum relative error between backprop gradients and central finite
/// differences of the mean cross-entropy loss, over every parameter entry
/// (or a seeded subsample of 256 entries for large networks).
pub fn grad_check(net: &mut Network, batch: &Tensor, labels: &[usize], eps: f64) -> Result<f64, NnError> {
    let logits = net.forward(batch)?;
    let (_, dlogits) = softmax_cross_entropy(&logits, labels)?;
    net.backward(&dlogits)?;
    let analytic: Vec<Vec<f64>> = net
        .params()
        .iter()
        .map(|p| p.grad().map(<[f64]>::to_vec).unwrap_or_else(|| vec![0.0; p.len()]))
        .collect();
    compare_with_finite_differences(net, batch, labels, eps, &analytic)
}

/// Compares caller-supplied gradients (one vector per parameter tensor, in
/// `Network::params` order) against central differences.
pub fn compare_with_finite_differences(
    net: &mut Network,
    batch: &Tensor,
    labels: &[usize],
    eps: f64,
    analytic: &[Vec<f64>],
) -> Result<f64, NnError> {
    if eps.is_nan() || eps <= 0.0 {
        return Err(NnError::InvalidArgument(format!("finite-difference step {eps} must be positive")));
    }
    let sizes: Vec<usize> = net.params().iter().map(|p| p.len()).collect();
    if sizes.len() != analytic.len() || sizes.iter().zip(analytic).any(|(&n, g)| n != g.len()) {
        return Err(NnError::ShapeMismatch {
            context: "grad_check".into(),
            expected: format!("gradients shaped like {sizes:?}"),
            found: format!("{:?}", analytic.iter().map(Vec::len).collect::<Vec<_>>()),
        });
    }
    let entries: Vec<(usize, usize)> = sizes
        .iter()
        .enumerate()
        .flat_map(|(t, &n)| (0..n).map(move |i| (t, i)))
        .collect();
    let entries = if entries.len() > FULL_CHECK_LIMIT {
        let mut rng = Prng::new(SUBSAMPLE_SEED);
        let mut picked = entries;
        rng.shuffle(&mut picked);
        picked.truncate(SUBSAMPLE);
        picked.sort_unstable();
        picked
    } else {
        entries
    };

    let mut worst = 0.0f64;
    for (t, i) in entries {
        let original = net.params()[t].data()[i];
        net.params_mut()[t].data_mut()[i] = original + eps;
        let plus = loss_at(net, batch, labels)?;
        net.params_mut()[t].data_mut()[i] = original - eps;
        let minus = loss_at(net, batch, labels)?;
        net.params_mut()[t].data_mut()[i] = original;

        let numeric = (plus - minus) / (2.0 * eps);
        let exact = analytic[t][i];
        let rel = (exact - numeric).abs() / exact.abs().max(numeric.abs()).max(1e-8);
        worst = worst.max(rel);
    }
    Ok(worst)
}

fn loss_at(net: &mut Network, batch: &Tensor, labels: &[usize]) -> Result<f64, NnError> {
    let logits = net.predict(batch)?;
    Ok(softmax_cross_entropy(&logits, labels)?.0)
}
