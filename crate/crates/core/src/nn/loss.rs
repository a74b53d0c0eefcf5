use super::{NnError, Tensor};

/// Mean softmax cross-entropy over the batch and its gradient with respect
/// to the logits, `(softmax - onehot) / batch`. Rows are max-shifted before
/// exponentiation.
pub fn softmax_cross_entropy(logits: &Tensor, labels: &[usize]) -> Result<(f64, Tensor), NnError> {
    let shape = logits.shape();
    if shape.len() != 2 || shape[0] != labels.len() {
        return Err(NnError::ShapeMismatch {
            context: "softmax_cross_entropy".into(),
            expected: format!("logits ({}, classes)", labels.len()),
            found: format!("{shape:?}"),
        });
    }
    let (batch, classes) = (shape[0], shape[1]);
    let mut grad = vec![0.0; batch * classes];
    let mut total = 0.0;
    for (i, (row, &label)) in logits.data().chunks_exact(classes).zip(labels).enumerate() {
        if label >= classes {
            return Err(NnError::LabelOutOfRange { index: i, label, num_classes: classes });
        }
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let g = &mut grad[i * classes..(i + 1) * classes];
        let mut sum = 0.0;
        for (e, &z) in g.iter_mut().zip(row) {
            *e = (z - max).exp();
            sum += *e;
        }
        total += sum.ln() - (row[label] - max);
        for e in g.iter_mut() {
            *e /= sum * batch as f64;
        }
        g[label] -= 1.0 / batch as f64;
    }
    let loss = total / batch as f64;
    if !loss.is_finite() {
        return Err(NnError::NonFinite("loss".into()));
    }
    Ok((loss, Tensor::new(shape.to_vec(), grad)?))
}

/// Row-wise argmax; ties resolve to the lowest class index.
pub fn argmax_rows(logits: &Tensor) -> Vec<usize> {
    let classes = logits.shape()[1];
    logits
        .data()
        .chunks_exact(classes)
        .map(|row| {
            let mut best = 0;
            for (j, &v) in row.iter().enumerate().skip(1) {
                if v > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}
