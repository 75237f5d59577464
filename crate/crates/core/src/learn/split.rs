//! Row-wise stratified and subject-wise grouped splits.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;

use super::LearnError;
use crate::model::RngSeed;

/// Fold index per row. Each class is shuffled and dealt round-robin, with
/// the dealing offset carried across classes so fold sizes stay balanced.
pub fn stratified_kfold(y: &[usize], k: usize, seed: RngSeed) -> Result<Vec<usize>, LearnError> {
    if k < 2 {
        return Err(LearnError::InvalidParams("k must be at least 2".into()));
    }
    if y.is_empty() {
        return Err(LearnError::EmptyMatrix);
    }
    let classes: BTreeSet<usize> = y.iter().copied().collect();
    let mut rng = seed.rng();
    let mut fold = vec![0; y.len()];
    let mut offset = 0;
    for c in classes {
        let mut rows: Vec<usize> = (0..y.len()).filter(|&i| y[i] == c).collect();
        if rows.len() < k {
            return Err(LearnError::ClassSmallerThanK { class: c, count: rows.len(), k });
        }
        rows.shuffle(&mut rng);
        for (j, r) in rows.iter().enumerate() {
            fold[*r] = (offset + j) % k;
        }
        offset = (offset + rows.len()) % k;
    }
    Ok(fold)
}

/// Stratified `(train, test)` row indices, both sorted. Each class
/// contributes `round(count * test_fraction)` rows to the test side.
pub fn holdout_split(y: &[usize], test_fraction: f64, seed: RngSeed) -> Result<(Vec<usize>, Vec<usize>), LearnError> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(LearnError::InvalidParams(format!("test fraction {test_fraction} outside (0, 1)")));
    }
    if y.is_empty() {
        return Err(LearnError::EmptyMatrix);
    }
    let classes: BTreeSet<usize> = y.iter().copied().collect();
    let mut rng = seed.rng();
    let mut train = Vec::new();
    let mut test = Vec::new();
    for c in classes {
        let mut rows: Vec<usize> = (0..y.len()).filter(|&i| y[i] == c).collect();
        rows.shuffle(&mut rng);
        let n_test = (rows.len() as f64 * test_fraction).round() as usize;
        test.extend_from_slice(&rows[..n_test]);
        train.extend_from_slice(&rows[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

fn shuffled_groups(groups: &[String], seed: RngSeed) -> Vec<&str> {
    let unique: BTreeSet<&str> = groups.iter().map(String::as_str).collect();
    let mut order: Vec<&str> = unique.into_iter().collect();
    order.shuffle(&mut seed.rng());
    order
}

/// Holds out whole groups (subjects): `round(G * test_fraction)`, at least one.
pub fn group_holdout_split(groups: &[String], test_fraction: f64, seed: RngSeed) -> Result<(Vec<usize>, Vec<usize>), LearnError> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(LearnError::InvalidParams(format!("test fraction {test_fraction} outside (0, 1)")));
    }
    let order = shuffled_groups(groups, seed);
    if order.len() < 2 {
        return Err(LearnError::TooFewGroups { groups: order.len(), k: 2 });
    }
    let n_test = ((order.len() as f64 * test_fraction).round() as usize).clamp(1, order.len() - 1);
    let held: BTreeSet<&str> = order[..n_test].iter().copied().collect();
    Ok((0..groups.len()).partition(|&i| !held.contains(groups[i].as_str())))
}

/// Fold index per row with every group confined to one fold.
pub fn group_kfold(groups: &[String], k: usize, seed: RngSeed) -> Result<Vec<usize>, LearnError> {
    let order = shuffled_groups(groups, seed);
    if k < 2 || order.len() < k {
        return Err(LearnError::TooFewGroups { groups: order.len(), k });
    }
    Ok(groups.iter().map(|g| order.iter().position(|o| *o == g).unwrap() % k).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folds_are_stratified_and_disjoint() {
        let y: Vec<usize> = (0..103).map(|i| i % 4).collect();
        let f = stratified_kfold(&y, 5, RngSeed(1)).unwrap();
        for c in 0..4 {
            let n_c = y.iter().filter(|&&l| l == c).count();
            for k in 0..5 {
                let in_fold = (0..y.len()).filter(|&i| y[i] == c && f[i] == k).count();
                assert!(in_fold == n_c / 5 || in_fold == n_c.div_ceil(5));
            }
        }
        let sizes: Vec<usize> = (0..5).map(|k| f.iter().filter(|&&v| v == k).count()).collect();
        assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1, "{sizes:?}");
    }

    #[test]
    fn small_class_rejected() {
        let y = vec![0, 0, 0, 0, 0, 1, 1, 1];
        assert_eq!(stratified_kfold(&y, 5, RngSeed(0)), Err(LearnError::ClassSmallerThanK { class: 1, count: 3, k: 5 }));
    }

    #[test]
    fn holdout_partitions_rows() {
        let y: Vec<usize> = (0..100).map(|i| usize::from(i % 10 == 0)).collect();
        let (tr, te) = holdout_split(&y, 0.2, RngSeed(3)).unwrap();
        assert_eq!(tr.len() + te.len(), 100);
        assert_eq!(te.len(), 20);
        assert_eq!(te.iter().filter(|&&i| y[i] == 1).count(), 2);
        assert!(tr.iter().all(|i| !te.contains(i)));
        assert_eq!(holdout_split(&y, 0.2, RngSeed(3)).unwrap(), (tr, te));
    }

    #[test]
    fn groups_never_straddle() {
        let groups: Vec<String> = (0..60).map(|i| format!("S{}", i % 6)).collect();
        let (tr, te) = group_holdout_split(&groups, 0.2, RngSeed(2)).unwrap();
        for i in &te {
            assert!(tr.iter().all(|j| groups[*j] != groups[*i]));
        }
        let f = group_kfold(&groups, 3, RngSeed(2)).unwrap();
        for i in 0..60 {
            for j in 0..60 {
                if groups[i] == groups[j] {
                    assert_eq!(f[i], f[j]);
                }
            }
        }
    }
}
