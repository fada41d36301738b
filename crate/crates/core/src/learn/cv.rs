use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Stratified k-fold split. Each class is shuffled and dealt round-robin,
/// continuing from where the previous class stopped, so every fold holds
/// `⌊n_c/k⌋` or `⌈n_c/k⌉` rows of class `c` and fold sizes stay balanced.
/// The per-fold counts depend only on class sizes, not on the seed.
pub fn stratified_kfold(y: &[usize], n_classes: usize, k: usize, seed: u64) -> Result<Vec<Fold>> {
    if k < 2 {
        return Err(Error::Dataset(format!("k must be at least 2, got {k}")));
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (i, &c) in y.iter().enumerate() {
        if c >= n_classes {
            return Err(Error::Dataset(format!("label {c} out of range")));
        }
        by_class[c].push(i);
    }
    for (c, rows) in by_class.iter().enumerate() {
        if rows.len() < k {
            return Err(Error::Dataset(format!(
                "class {c} has {} rows, fewer than the {k} folds",
                rows.len()
            )));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold_of = vec![0usize; y.len()];
    let mut offset = 0;
    for rows in &mut by_class {
        rows.shuffle(&mut rng);
        for (p, &i) in rows.iter().enumerate() {
            fold_of[i] = (offset + p) % k;
        }
        offset = (offset + rows.len()) % k;
    }

    Ok((0..k)
        .map(|f| {
            let (test, train) = (0..y.len()).partition(|&i| fold_of[i] == f);
            Fold { train, test }
        })
        .collect())
}
