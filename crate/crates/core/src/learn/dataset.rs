use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::MethodGroup;
use crate::motif::{FeatureVector, Vocabulary};
use crate::store::SampleLabel;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Dataset("ragged rows".into()));
        }
        let n = rows.len();
        Ok(Matrix {
            rows: n,
            cols,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetOptions {
    /// Classes with fewer labelled rows are dropped.
    pub min_class_support: usize,
}

impl Default for DatasetOptions {
    fn default() -> Self {
        DatasetOptions {
            min_class_support: 10,
        }
    }
}

/// Labelled feature matrix. Rows are sorted by `(tx_hash, ego)` and hold at
/// most one row per tx_hash so that folds never share a transaction.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub vocabulary: Vocabulary,
    /// Present classes in global method-group order; `y` indexes this list.
    pub classes: Vec<MethodGroup>,
    pub ids: Vec<(String, String)>,
    pub x: Matrix,
    pub y: Vec<usize>,
    pub features: Vec<FeatureVector>,
}

impl Dataset {
    /// Joins features with labels and builds the vocabulary over the
    /// labelled rows.
    pub fn from_features(
        vectors: &[FeatureVector],
        labels: &[SampleLabel],
        opts: DatasetOptions,
    ) -> Result<Self> {
        let rows = join(vectors, labels);
        let mut support: BTreeMap<MethodGroup, usize> = BTreeMap::new();
        for (_, g) in &rows {
            *support.entry(*g).or_default() += 1;
        }
        let classes: Vec<MethodGroup> = support
            .iter()
            .filter(|(_, &n)| n >= opts.min_class_support.max(1))
            .map(|(&g, _)| g)
            .collect();
        let rows: Vec<_> = rows
            .into_iter()
            .filter(|(_, g)| classes.contains(g))
            .collect();
        let kept: Vec<FeatureVector> = rows.iter().map(|(v, _)| (*v).clone()).collect();
        let vocabulary = Vocabulary::build(&kept);
        Self::assemble(rows, vocabulary, classes)
    }

    /// Joins features with labels under an existing vocabulary and class
    /// list (evaluation of a saved model).
    pub fn with_vocabulary(
        vectors: &[FeatureVector],
        labels: &[SampleLabel],
        vocabulary: Vocabulary,
        classes: Vec<MethodGroup>,
    ) -> Result<Self> {
        let rows: Vec<_> = join(vectors, labels)
            .into_iter()
            .filter(|(_, g)| classes.contains(g))
            .collect();
        Self::assemble(rows, vocabulary, classes)
    }

    fn assemble(
        rows: Vec<(&FeatureVector, MethodGroup)>,
        vocabulary: Vocabulary,
        classes: Vec<MethodGroup>,
    ) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Dataset("no labelled rows".into()));
        }
        let class_index: HashMap<MethodGroup, usize> =
            classes.iter().enumerate().map(|(i, &g)| (g, i)).collect();
        let mut x = Matrix::zeros(rows.len(), vocabulary.n_columns());
        let mut y = Vec::with_capacity(rows.len());
        let mut ids = Vec::with_capacity(rows.len());
        let mut features = Vec::with_capacity(rows.len());
        for (i, (v, g)) in rows.into_iter().enumerate() {
            x.row_mut(i).copy_from_slice(&vocabulary.dense(v));
            y.push(class_index[&g]);
            ids.push((v.tx_hash.clone(), v.ego.clone()));
            features.push(v.clone());
        }
        Ok(Dataset {
            vocabulary,
            classes,
            ids,
            x,
            y,
            features,
        })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.n_classes()];
        for &y in &self.y {
            c[y] += 1;
        }
        c
    }

    pub fn class_weights(&self) -> Result<Vec<f64>> {
        let all: Vec<usize> = (0..self.len()).collect();
        class_weights(&self.y, &all, self.n_classes())
    }
}

fn join<'a>(
    vectors: &'a [FeatureVector],
    labels: &[SampleLabel],
) -> Vec<(&'a FeatureVector, MethodGroup)> {
    let by_id: HashMap<(&str, &str), MethodGroup> = labels
        .iter()
        .map(|l| ((l.tx_hash.as_str(), l.ego.as_str()), l.method_group))
        .collect();
    let mut rows: Vec<(&FeatureVector, MethodGroup)> = vectors
        .iter()
        .filter_map(|v| by_id.get(&v.sample_id()).map(|&g| (v, g)))
        .collect();
    rows.sort_by(|a, b| a.0.sample_id().cmp(&b.0.sample_id()));
    rows.dedup_by(|b, a| a.0.tx_hash == b.0.tx_hash);
    rows
}

/// Balanced class weights `N / (K · n_c)` over the rows in `idx`.
pub fn class_weights(y: &[usize], idx: &[usize], n_classes: usize) -> Result<Vec<f64>> {
    let mut counts = vec![0usize; n_classes];
    for &i in idx {
        counts[y[i]] += 1;
    }
    if let Some(c) = counts.iter().position(|&n| n == 0) {
        return Err(Error::Dataset(format!("class {c} has no rows")));
    }
    let n = idx.len() as f64;
    let k = n_classes as f64;
    Ok(counts.iter().map(|&c| n / (k * c as f64)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::motif::FeatureMode;

    #[test]
    fn weights_two_classes() {
        let y: Vec<usize> = (0..100).map(|i| usize::from(i >= 90)).collect();
        let idx: Vec<usize> = (0..100).collect();
        let w = class_weights(&y, &idx, 2).unwrap();
        assert!((w[0] - 100.0 / 180.0).abs() < 1e-15);
        assert!((w[1] - 5.0).abs() < 1e-15);
    }

    #[test]
    fn weights_uniform_are_one() {
        let y: Vec<usize> = (0..80).map(|i| i % 8).collect();
        let idx: Vec<usize> = (0..80).collect();
        assert!(class_weights(&y, &idx, 8)
            .unwrap()
            .iter()
            .all(|&w| w == 1.0));
    }

    #[test]
    fn weight_ratio_follows_inverse_support() {
        // Transfer 404,130 vs Borrow 1,389 rows.
        let mut y = vec![0usize; 404_130];
        y.extend(std::iter::repeat(1).take(1_389));
        let idx: Vec<usize> = (0..y.len()).collect();
        let w = class_weights(&y, &idx, 2).unwrap();
        assert!((w[1] / w[0] - 290.95).abs() < 0.01);
    }

    #[test]
    fn empty_class_is_an_error() {
        assert!(class_weights(&[0, 0], &[0, 1], 2).is_err());
    }

    fn fv(hash: &str, ego: &str, key: &str) -> FeatureVector {
        FeatureVector {
            tx_hash: hash.into(),
            ego: ego.into(),
            mode: FeatureMode::E,
            features: [(key.to_string(), 1)].into(),
        }
    }

    fn label(hash: &str, ego: &str, g: MethodGroup) -> SampleLabel {
        SampleLabel {
            tx_hash: hash.into(),
            ego: ego.into(),
            method_group: g,
        }
    }

    #[test]
    fn join_sorts_dedupes_and_filters_rare_classes() {
        let vs = vec![
            fv("b", "e1", "x"),
            fv("a", "e2", "y"),
            fv("a", "e1", "z"),
            fv("c", "e1", "w"),
        ];
        let ls = vec![
            label("a", "e1", MethodGroup::Swap),
            label("a", "e2", MethodGroup::Swap),
            label("b", "e1", MethodGroup::Swap),
            label("c", "e1", MethodGroup::Mint),
        ];
        let ds = Dataset::from_features(
            &vs,
            &ls,
            DatasetOptions {
                min_class_support: 2,
            },
        )
        .unwrap();
        assert_eq!(
            ds.ids,
            vec![("a".into(), "e1".into()), ("b".into(), "e1".into())]
        );
        assert_eq!(ds.classes, vec![MethodGroup::Swap]);
        assert_eq!(ds.vocabulary.keys(), ["x", "z"]);
    }
}
