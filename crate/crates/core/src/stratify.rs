//! Stratified index partitioning shared by dataset fold construction and the
//! inner cross-validation loop of the hyperparameter search.

use crate::rng::SplitMix64;

/// Partition `0..labels.len()` into `k` stratified test-index sets.
///
/// Positives and negatives are shuffled separately with the seeded generator
/// and dealt round-robin, so every fold's positive count is within one of
/// `n_pos / k`. Indices inside each fold are returned in ascending order.
pub fn stratified_test_folds(labels: &[u8], k: usize, seed: u64) -> Vec<Vec<usize>> {
    debug_assert!(k >= 2);
    let mut pos: Vec<usize> = Vec::new();
    let mut neg: Vec<usize> = Vec::new();
    for (i, &y) in labels.iter().enumerate() {
        if y == 1 {
            pos.push(i);
        } else {
            neg.push(i);
        }
    }
    let mut rng = SplitMix64::new(seed);
    rng.shuffle(&mut pos);
    rng.shuffle(&mut neg);

    let mut folds: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (j, &idx) in pos.iter().enumerate() {
        folds[j % k].push(idx);
    }
    for (j, &idx) in neg.iter().enumerate() {
        folds[j % k].push(idx);
    }
    for fold in &mut folds {
        fold.sort_unstable();
    }
    folds
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folds_cover_all_indices_exactly_once() {
        let labels: Vec<u8> = (0..103).map(|i| u8::from(i % 11 == 0)).collect();
        let folds = stratified_test_folds(&labels, 5, 42);
        let mut seen = vec![0usize; labels.len()];
        for fold in &folds {
            for &i in fold {
                seen[i] += 1;
            }
        }
        assert!(seen.iter().all(|&c| c == 1));
    }

    #[test]
    fn positive_counts_within_one_of_expected() {
        let labels: Vec<u8> = (0..100).map(|i| u8::from(i < 10)).collect();
        let folds = stratified_test_folds(&labels, 5, 42);
        for fold in &folds {
            let pos = fold.iter().filter(|&&i| labels[i] == 1).count();
            assert_eq!(pos, 2);
        }
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let labels: Vec<u8> = (0..57).map(|i| u8::from(i % 7 == 0)).collect();
        assert_eq!(
            stratified_test_folds(&labels, 4, 9),
            stratified_test_folds(&labels, 4, 9)
        );
    }
}
