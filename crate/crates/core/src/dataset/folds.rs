//! Seeded stratified k-fold assignment.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::rng::stream_rng;

use super::{DatasetError, FlowRecord};

/// A per-record fold assignment preserving class proportions.
///
/// Within every class the per-fold counts differ by at most one, so each fold
/// mirrors the overall class distribution as closely as integer counts allow.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StratifiedFolds {
    n_folds: usize,
    assignment: Vec<u32>,
}

impl StratifiedFolds {
    pub fn n_folds(&self) -> usize {
        self.n_folds
    }

    pub fn fold_of(&self, record: usize) -> usize {
        self.assignment[record] as usize
    }

    pub fn assignment(&self) -> &[u32] {
        &self.assignment
    }

    /// Record indices belonging to fold `fold`.
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        self.assignment
            .iter()
            .enumerate()
            .filter(|(_, &f)| f as usize == fold)
            .map(|(i, _)| i)
            .collect()
    }

    /// Record indices outside fold `fold`.
    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        self.assignment
            .iter()
            .enumerate()
            .filter(|(_, &f)| f as usize != fold)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Assigns records to `n_folds` folds, stratified by subtype.
///
/// Each class is shuffled with its own seed-derived RNG stream and dealt
/// round-robin from a random starting fold, which keeps per-class fold counts
/// within one of each other and makes the assignment deterministic for a
/// fixed seed. `n_folds` must be at least 2.
pub fn stratified_folds(
    records: &[FlowRecord],
    n_folds: usize,
    seed: u64,
) -> Result<StratifiedFolds, DatasetError> {
    debug_assert!(n_folds >= 2, "n_folds must be at least 2");
    if records.is_empty() {
        return Err(DatasetError::EmptyDataset);
    }
    let max_subtype = records
        .iter()
        .map(|r| r.label.subtype.0 as usize)
        .max()
        .unwrap_or(0);
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); max_subtype + 1];
    for (i, r) in records.iter().enumerate() {
        by_class[r.label.subtype.0 as usize].push(i);
    }
    let mut assignment = vec![0u32; records.len()];
    for (class, mut members) in by_class.into_iter().enumerate() {
        if members.is_empty() {
            continue;
        }
        let mut rng = stream_rng(seed, class as u64);
        members.shuffle(&mut rng);
        let start = rng.gen_range(0..n_folds);
        for (pos, record) in members.into_iter().enumerate() {
            assignment[record] = ((start + pos) % n_folds) as u32;
        }
    }
    Ok(StratifiedFolds {
        n_folds,
        assignment,
    })
}

#[cfg(test)]
mod tests {
    use super::super::Taxonomy;
    use super::*;

    fn records_of(counts: &[(&str, usize)]) -> Vec<FlowRecord> {
        let taxonomy = Taxonomy::default_iomt();
        let mut records = Vec::new();
        for &(name, count) in counts {
            let label = taxonomy.lookup(name).unwrap();
            for _ in 0..count {
                records.push(FlowRecord {
                    features: vec![0.0],
                    label,
                });
            }
        }
        records
    }

    fn per_fold_counts(records: &[FlowRecord], folds: &StratifiedFolds, name: &str) -> Vec<usize> {
        let taxonomy = Taxonomy::default_iomt();
        let id = taxonomy.lookup(name).unwrap().subtype;
        let mut counts = vec![0usize; folds.n_folds()];
        for (i, r) in records.iter().enumerate() {
            if r.label.subtype == id {
                counts[folds.fold_of(i)] += 1;
            }
        }
        counts
    }

    #[test]
    fn divisible_class_splits_evenly() {
        let records = records_of(&[("Benign", 100)]);
        let folds = stratified_folds(&records, 10, 1).unwrap();
        assert_eq!(per_fold_counts(&records, &folds, "Benign"), vec![10; 10]);
    }

    #[test]
    fn class_of_926_lands_in_92_or_93_per_fold() {
        let records = records_of(&[("Ping Sweep", 926)]);
        let folds = stratified_folds(&records, 10, 1).unwrap();
        let counts = per_fold_counts(&records, &folds, "Ping Sweep");
        assert!(counts.iter().all(|&c| c == 92 || c == 93));
        assert_eq!(counts.iter().sum::<usize>(), 926);
        assert_eq!(counts.iter().filter(|&&c| c == 93).count(), 6);
    }

    #[test]
    fn two_class_proportions_preserved() {
        let records = records_of(&[("Benign", 90), ("DoS TCP", 10)]);
        let folds = stratified_folds(&records, 10, 5).unwrap();
        assert_eq!(per_fold_counts(&records, &folds, "Benign"), vec![9; 10]);
        assert_eq!(per_fold_counts(&records, &folds, "DoS TCP"), vec![1; 10]);
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let records = records_of(&[("Benign", 57), ("DDoS SYN", 23), ("OS Scan", 11)]);
        let a = stratified_folds(&records, 10, 42).unwrap();
        let b = stratified_folds(&records, 10, 42).unwrap();
        let c = stratified_folds(&records, 10, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn train_and_test_partition_all_records() {
        let records = records_of(&[("Benign", 37), ("DoS UDP", 13)]);
        let folds = stratified_folds(&records, 5, 9).unwrap();
        for fold in 0..5 {
            let mut seen = folds.test_indices(fold);
            seen.extend(folds.train_indices(fold));
            seen.sort_unstable();
            assert_eq!(seen, (0..records.len()).collect::<Vec<_>>());
        }
    }

    #[test]
    fn empty_input_rejected() {
        assert!(matches!(
            stratified_folds(&[], 10, 0),
            Err(DatasetError::EmptyDataset)
        ));
    }
}
