use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::Matrix;
use super::tree::{fit_tree_binned, BinnedMatrix, DecisionTree, MaxFeatures, TreeParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestParams {
    pub n_trees: usize,
    pub min_leaf: usize,
    pub max_features: MaxFeatures,
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            min_leaf: 10,
            max_features: MaxFeatures::Sqrt,
            bootstrap: true,
        }
    }
}

impl ForestParams {
    pub fn tree_params(&self) -> TreeParams {
        TreeParams {
            min_leaf: self.min_leaf,
            max_leaves: None,
            max_features: self.max_features,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<DecisionTree>,
    pub n_classes: usize,
}

/// Random stream of tree `t`: the forest seed on stream `t`.
pub fn tree_rng(seed: u64, t: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(t as u64);
    rng
}

/// Bootstrap sample of tree `t`, drawn first from its stream.
pub fn bootstrap_rows(rows: &[usize], rng: &mut ChaCha8Rng) -> Vec<usize> {
    (0..rows.len())
        .map(|_| rows[rng.gen_range(0..rows.len())])
        .collect()
}

pub fn fit_forest(
    x: &Matrix,
    y: &[usize],
    n_classes: usize,
    rows: &[usize],
    class_weights: &[f64],
    params: &ForestParams,
    seed: u64,
) -> ForestModel {
    let data = BinnedMatrix::new(x);
    let tree_params = params.tree_params();
    let trees = (0..params.n_trees.max(1))
        .into_par_iter()
        .map(|t| {
            let mut rng = tree_rng(seed, t);
            let sample = if params.bootstrap {
                bootstrap_rows(rows, &mut rng)
            } else {
                rows.to_vec()
            };
            fit_tree_binned(
                &data,
                y,
                n_classes,
                &sample,
                class_weights,
                &tree_params,
                &mut rng,
            )
        })
        .collect();
    ForestModel { trees, n_classes }
}

impl ForestModel {
    pub fn votes(&self, row: &[f64]) -> Vec<usize> {
        let mut v = vec![0; self.n_classes];
        for t in &self.trees {
            v[t.predict(row)] += 1;
        }
        v
    }

    /// Majority vote; ties go to the lowest class index.
    pub fn predict(&self, row: &[f64]) -> usize {
        let v = self.votes(row);
        let mut best = 0;
        for (c, &n) in v.iter().enumerate() {
            if n > v[best] {
                best = c;
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_features_floor() {
        assert_eq!(MaxFeatures::Sqrt.resolve(10), 3);
        assert_eq!(MaxFeatures::Sqrt.resolve(1), 1);
        assert_eq!(MaxFeatures::Count(50).resolve(8), 8);
    }

    #[test]
    fn forest_is_deterministic() {
        let rows: Vec<Vec<f64>> = (0..120)
            .map(|i| vec![(i % 7) as f64, (i % 5) as f64, (i % 3) as f64])
            .collect();
        let x = Matrix::from_rows(rows).unwrap();
        let y: Vec<usize> = (0..120).map(|i| usize::from(i % 7 > 3)).collect();
        let idx: Vec<usize> = (0..120).collect();
        let p = ForestParams {
            n_trees: 8,
            ..ForestParams::default()
        };
        let a = fit_forest(&x, &y, 2, &idx, &[1.0, 1.0], &p, 42);
        let b = fit_forest(&x, &y, 2, &idx, &[1.0, 1.0], &p, 42);
        assert_eq!(a, b);
    }
}
