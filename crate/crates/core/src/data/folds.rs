use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Assigns each item to one of `k` folds, preserving class proportions.
///
/// Items of each class are shuffled and dealt round-robin, with the dealing
/// position carried over from one class to the next. Every fold then holds
/// `floor` or `ceil` of `count_c / k` items of class `c`, and fold sizes
/// differ by at most one.
pub fn stratified_folds<L: Ord + Copy>(labels: &[L], k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(Error::validation(format!("need at least 2 folds, got {k}")));
    }
    if k > labels.len() {
        return Err(Error::validation(format!(
            "{k} folds requested for {} items",
            labels.len()
        )));
    }
    let mut by_class: BTreeMap<L, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        by_class.entry(l).or_default().push(i);
    }
    if by_class.values().any(|members| members.len() < k) {
        log::warn!("some class has fewer than {k} members; folds are balanced best-effort");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![0; labels.len()];
    let mut next = 0;
    for members in by_class.values_mut() {
        members.shuffle(&mut rng);
        for &i in members.iter() {
            folds[i] = next;
            next = (next + 1) % k;
        }
    }
    Ok(folds)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn histogram(labels: &[i64], folds: &[usize], k: usize) -> Vec<BTreeMap<i64, usize>> {
        let mut h = vec![BTreeMap::new(); k];
        for (&l, &f) in labels.iter().zip(folds) {
            *h[f].entry(l).or_insert(0) += 1;
        }
        h
    }

    #[test]
    fn balanced_two_classes() {
        let labels: Vec<i64> = (0..10).map(|i| i % 2).collect();
        let folds = stratified_folds(&labels, 2, 4).unwrap();
        for fold in histogram(&labels, &folds, 2) {
            assert_eq!(fold.values().sum::<usize>(), 5);
            for &c in fold.values() {
                assert!((2..=3).contains(&c));
            }
        }
    }

    #[test]
    fn single_label_sizes() {
        let labels = vec![7i64; 23];
        let folds = stratified_folds(&labels, 5, 1).unwrap();
        let mut sizes = vec![0; 5];
        for f in folds {
            sizes[f] += 1;
        }
        assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
    }

    #[test]
    fn too_many_folds() {
        assert!(stratified_folds(&[1i64, 2, 3], 4, 0).is_err());
        assert!(stratified_folds(&[1i64, 2, 3], 1, 0).is_err());
    }

    #[test]
    fn deterministic() {
        let labels: Vec<i64> = (0..50).map(|i| (i * 7 % 3) as i64).collect();
        assert_eq!(
            stratified_folds(&labels, 5, 9).unwrap(),
            stratified_folds(&labels, 5, 9).unwrap()
        );
    }
}
