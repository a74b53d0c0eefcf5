use super::{DataError, Dataset, Prng};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
}

/// Train/validation index sets of a seeded partition of `0..n`, each sorted.
pub fn split_indices(n: usize, spec: SplitSpec) -> Result<(Vec<usize>, Vec<usize>), DataError> {
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(DataError::InvalidArgument(format!(
            "train fraction {} must lie in (0, 1)",
            spec.train_fraction
        )));
    }
    let n_train = (n as f64 * spec.train_fraction).round() as usize;
    if n_train == 0 || n_train == n {
        return Err(DataError::EmptySplit { n, train_fraction: spec.train_fraction });
    }
    let perm = Prng::new(spec.seed).permutation(n);
    let mut train = perm[..n_train].to_vec();
    let mut val = perm[n_train..].to_vec();
    train.sort_unstable();
    val.sort_unstable();
    Ok((train, val))
}

/// Seeded train/validation partition; both sides inherit class count and provenance.
pub fn split(d: &Dataset, spec: SplitSpec) -> Result<(Dataset, Dataset), DataError> {
    let (train, val) = split_indices(d.len(), spec)?;
    Ok((d.subset(&train)?, d.subset(&val)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes_and_partition() {
        let spec = SplitSpec { train_fraction: 0.8, seed: 3 };
        let (a, b) = split_indices(10, spec).unwrap();
        assert_eq!((a.len(), b.len()), (8, 2));
        let mut all: Vec<usize> = a.iter().chain(&b).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
        assert_eq!(split_indices(10, spec).unwrap(), (a, b));
    }

    #[test]
    fn empty_side_is_an_error() {
        assert!(split_indices(10, SplitSpec { train_fraction: 0.97, seed: 0 }).is_err());
        assert!(split_indices(10, SplitSpec { train_fraction: 0.01, seed: 0 }).is_err());
        assert!(split_indices(10, SplitSpec { train_fraction: 1.0, seed: 0 }).is_err());
    }
}
