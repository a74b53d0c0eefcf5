use super::{splitmix64, DataError, Dataset, Labeling, Prng};

/// I.i.d. uniform labels over `[0, num_classes)`, one draw per sample in
/// sample order from a SplitMix64 stream seeded with `seed`.
pub fn random_labels(n: usize, num_classes: usize, seed: u64) -> Vec<usize> {
    let mut rng = Prng::new(seed);
    (0..n).map(|_| rng.below(num_classes as u64) as usize).collect()
}

/// Replaces every label with a fixed random one over the dataset's own class count.
pub fn assign_random_labels(d: &Dataset, seed: u64) -> Dataset {
    assign_random_labels_with_classes(d, seed, d.num_classes()).expect("class count already valid")
}

/// As [`assign_random_labels`] but over an explicit class count.
pub fn assign_random_labels_with_classes(d: &Dataset, seed: u64, num_classes: usize) -> Result<Dataset, DataError> {
    if num_classes == 0 {
        return Err(DataError::InvalidArgument("num_classes must be positive".into()));
    }
    d.relabeled(random_labels(d.len(), num_classes, seed), num_classes, Labeling::Random { seed })
}

/// Seed of reshuffle round `round`: `splitmix64(base_seed ^ round)`.
pub fn reshuffle_seed(base_seed: u64, round: u32) -> u64 {
    splitmix64(base_seed ^ u64::from(round))
}

/// Random labeling number `round` (1-based) of a reshuffle sequence.
pub fn reshuffle_labels(d: &Dataset, base_seed: u64, round: u32) -> Result<Dataset, DataError> {
    reshuffle_labels_with_classes(d, base_seed, round, d.num_classes())
}

pub fn reshuffle_labels_with_classes(
    d: &Dataset,
    base_seed: u64,
    round: u32,
    num_classes: usize,
) -> Result<Dataset, DataError> {
    if round == 0 {
        return Err(DataError::InvalidArgument("reshuffle rounds start at 1".into()));
    }
    if num_classes == 0 {
        return Err(DataError::InvalidArgument("num_classes must be positive".into()));
    }
    let labels = random_labels(d.len(), num_classes, reshuffle_seed(base_seed, round));
    d.relabeled(labels, num_classes, Labeling::Reshuffled { base_seed, round })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Tensor;

    fn plain(n: usize, k: usize) -> Dataset {
        let samples = Tensor::new(vec![n, 1], (0..n).map(|i| i as f64).collect()).unwrap();
        Dataset::new(samples, (0..n).map(|i| i % k).collect(), k, Labeling::True).unwrap()
    }

    #[test]
    fn same_seed_same_labels_and_samples_untouched() {
        let d = plain(50, 4);
        let a = assign_random_labels(&d, 17);
        let b = assign_random_labels(&d, 17);
        assert_eq!(a.labels(), b.labels());
        assert_eq!(a.samples(), d.samples());
        assert_eq!(a.labeling(), Labeling::Random { seed: 17 });
    }

    #[test]
    fn round_zero_is_rejected() {
        assert!(reshuffle_labels(&plain(5, 2), 1, 0).is_err());
    }

    #[test]
    fn round_one_differs_from_plain_random_labels() {
        let d = plain(200, 10);
        let r1 = reshuffle_labels(&d, 42, 1).unwrap();
        let direct = assign_random_labels(&d, 42);
        assert_ne!(r1.labels(), direct.labels());
        assert_eq!(r1.labels(), assign_random_labels(&d, reshuffle_seed(42, 1)).labels());
    }
}
