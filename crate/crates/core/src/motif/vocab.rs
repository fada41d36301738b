//! Closed feature vocabularies with an out-of-vocabulary bucket.

use std::collections::{BTreeSet, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::features::FeatureVector;
use crate::error::{Error, Result};

/// Name of the column that collects keys unseen at training time.
pub const OOV_KEY: &str = "__oov__";

/// Lexicographically ordered feature keys fixing column order. The OOV
/// column always comes last.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    keys: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    /// Two-phase build: per-chunk key sets, merged once.
    pub fn build(vectors: &[FeatureVector]) -> Self {
        let keys: BTreeSet<String> = vectors
            .par_chunks(4096)
            .map(|chunk| {
                chunk
                    .iter()
                    .flat_map(|v| v.features.keys().cloned())
                    .collect::<BTreeSet<String>>()
            })
            .reduce(BTreeSet::new, |mut a, b| {
                a.extend(b);
                a
            });
        Self::from_sorted(keys.into_iter().collect())
    }

    pub fn from_keys(keys: Vec<String>) -> Result<Self> {
        if keys.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid(
                "vocabulary",
                "keys must be unique and sorted",
            ));
        }
        if keys.iter().any(|k| k == OOV_KEY) {
            return Err(Error::invalid("vocabulary", "reserved key in vocabulary"));
        }
        Ok(Self::from_sorted(keys))
    }

    fn from_sorted(keys: Vec<String>) -> Self {
        let index = keys
            .iter()
            .enumerate()
            .map(|(i, k)| (k.clone(), i))
            .collect();
        Vocabulary { keys, index }
    }

    pub fn keys(&self) -> &[String] {
        &self.keys
    }

    pub fn n_columns(&self) -> usize {
        self.keys.len() + 1
    }

    pub fn oov_column(&self) -> usize {
        self.keys.len()
    }

    pub fn column(&self, key: &str) -> Option<usize> {
        self.index.get(key).copied()
    }

    pub fn column_name(&self, column: usize) -> &str {
        self.keys.get(column).map_or(OOV_KEY, String::as_str)
    }

    /// Dense row; unseen keys are summed into the OOV column.
    pub fn dense(&self, v: &FeatureVector) -> Vec<f64> {
        let mut row = vec![0.0; self.n_columns()];
        for (k, &c) in &v.features {
            let col = self.column(k).unwrap_or(self.oov_column());
            row[col] += c as f64;
        }
        row
    }
}

impl Serialize for Vocabulary {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.keys.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Vocabulary {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let keys = Vec::<String>::deserialize(d)?;
        Vocabulary::from_keys(keys).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::motif::FeatureMode;
    use std::collections::BTreeMap;

    fn fv(pairs: &[(&str, u64)]) -> FeatureVector {
        FeatureVector {
            tx_hash: "t".into(),
            ego: "e".into(),
            mode: FeatureMode::E,
            features: pairs
                .iter()
                .map(|(k, c)| (k.to_string(), *c))
                .collect::<BTreeMap<_, _>>(),
        }
    }

    #[test]
    fn build_sorts_and_dedupes() {
        let v = Vocabulary::build(&[fv(&[("b", 1), ("a", 2)]), fv(&[("b", 3), ("c", 1)])]);
        assert_eq!(v.keys(), ["a", "b", "c"]);
        assert_eq!(v.n_columns(), 4);
    }

    #[test]
    fn unseen_keys_go_to_oov() {
        let v = Vocabulary::build(&[fv(&[("a", 1)])]);
        assert_eq!(
            v.dense(&fv(&[("a", 2), ("x", 3), ("y", 1)])),
            vec![2.0, 4.0]
        );
        assert_eq!(v.column_name(1), OOV_KEY);
    }

    #[test]
    fn unsorted_keys_are_rejected() {
        assert!(Vocabulary::from_keys(vec!["b".into(), "a".into()]).is_err());
        let v: Vocabulary = serde_json::from_str(r#"["a","b"]"#).unwrap();
        assert_eq!(serde_json::to_string(&v).unwrap(), r#"["a","b"]"#);
    }
}
