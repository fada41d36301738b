//! Pruned-tree leaf signatures: frequent feature itemsets that describe what
//! each leaf's transactions share, and matching of those itemsets against
//! unlabelled transactions.

mod ccp;
mod itemset;

use std::collections::BTreeSet;
use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use ccp::{
    ccp_path, is_pruned_subtree, select_pruned, CcpEntry, CcpPath, PruneSelection, PruneTarget,
};
pub use itemset::{mine_itemset, Itemset, ItemsetMode, SignatureItem, EXHAUSTIVE_LIMIT};

use crate::error::{Error, Result};
use crate::ingest::MethodGroup;
use crate::learn::{
    fit_tree_binned, macro_scores, stratified_kfold, BinnedMatrix, Dataset, DecisionTree,
    TreeParams,
};
use crate::motif::{FeatureMode, FeatureVector, Vocabulary};

pub const DEFAULT_THRESHOLD: f64 = 0.8;
pub const SIGNATURES_FORMAT: &str = "motifscope-signatures";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeafSignature {
    pub leaf: usize,
    pub method_group: MethodGroup,
    /// Weighted purity of the leaf's predicted class.
    pub probability: f64,
    pub samples: usize,
    pub itemset: Itemset,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignatureSet {
    pub format: String,
    pub version: u32,
    pub mode: FeatureMode,
    pub threshold: f64,
    pub itemset_mode: ItemsetMode,
    pub signatures: Vec<LeafSignature>,
}

impl SignatureSet {
    pub fn to_json(&self) -> Result<Vec<u8>> {
        Ok(serde_json::to_vec_pretty(self)?)
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let s: SignatureSet = serde_json::from_slice(bytes)?;
        if s.format != SIGNATURES_FORMAT || s.version != 1 {
            return Err(Error::invalid(
                "signatures",
                format!("unsupported format {} v{}", s.format, s.version),
            ));
        }
        if !(0.0..1.0).contains(&s.threshold) {
            return Err(Error::invalid(
                "signatures",
                format!("threshold {} outside [0, 1)", s.threshold),
            ));
        }
        let mut seen = BTreeSet::new();
        if !s.signatures.iter().all(|l| seen.insert(l.leaf)) {
            return Err(Error::invalid("signatures", "duplicate leaf id"));
        }
        Ok(s)
    }

    /// Signatures usable for matching.
    pub fn usable(&self) -> impl Iterator<Item = &LeafSignature> {
        self.signatures.iter().filter(|s| !s.itemset.is_empty())
    }

    pub fn get(&self, leaf: usize) -> Option<&LeafSignature> {
        self.signatures.iter().find(|s| s.leaf == leaf)
    }
}

/// Presence set of a feature vector.
pub fn present_keys(v: &FeatureVector) -> BTreeSet<String> {
    v.features
        .iter()
        .filter(|(_, &c)| c > 0)
        .map(|(k, _)| k.clone())
        .collect()
}

/// Routes every row of `ds` through `tree` and mines one itemset per leaf.
pub fn mine_signatures(
    tree: &DecisionTree,
    ds: &Dataset,
    threshold: f64,
    mode: ItemsetMode,
) -> Result<SignatureSet> {
    if !(0.0..1.0).contains(&threshold) {
        return Err(Error::Config(format!(
            "support threshold {threshold} outside [0, 1)"
        )));
    }
    if tree.n_features != ds.vocabulary.n_columns() || tree.n_classes != ds.n_classes() {
        return Err(Error::Model(
            "tree does not match the dataset's vocabulary or classes".into(),
        ));
    }
    let mut by_leaf: Vec<Vec<usize>> = vec![Vec::new(); tree.nodes.len()];
    for r in 0..ds.len() {
        by_leaf[tree.leaf_of(ds.x.row(r))].push(r);
    }
    let signatures = tree
        .leaves()
        .into_par_iter()
        .map(|leaf| {
            let samples: Vec<BTreeSet<String>> = by_leaf[leaf]
                .iter()
                .map(|&r| present_keys(&ds.features[r]))
                .collect();
            let node = &tree.nodes[leaf];
            LeafSignature {
                leaf,
                method_group: ds.classes[node.class()],
                probability: node.probability(),
                samples: samples.len(),
                itemset: mine_itemset(&samples, threshold, mode),
            }
        })
        .collect();
    Ok(SignatureSet {
        format: SIGNATURES_FORMAT.into(),
        version: 1,
        mode: ds.features.first().map_or(FeatureMode::ME, |v| v.mode),
        threshold,
        itemset_mode: mode,
        signatures,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignatureMatch {
    pub tx_hash: String,
    pub ego: String,
    /// Leaves whose whole itemset is present, ascending.
    pub leaves: Vec<usize>,
    /// Distinct groups of the matched leaves in method-group order.
    pub groups: Vec<MethodGroup>,
}

pub fn match_signatures(v: &FeatureVector, set: &SignatureSet) -> SignatureMatch {
    let present = |k: &str| v.features.get(k).is_some_and(|&c| c > 0);
    let mut leaves = Vec::new();
    let mut groups = BTreeSet::new();
    for s in set.usable() {
        if s.itemset.items.iter().all(|i| present(&i.key)) {
            leaves.push(s.leaf);
            groups.insert(s.method_group);
        }
    }
    leaves.sort_unstable();
    SignatureMatch {
        tx_hash: v.tx_hash.clone(),
        ego: v.ego.clone(),
        leaves,
        groups: groups.into_iter().collect(),
    }
}

pub fn match_all(vectors: &[FeatureVector], set: &SignatureSet) -> Vec<SignatureMatch> {
    vectors
        .par_iter()
        .map(|v| match_signatures(v, set))
        .collect()
}

pub fn write_matches<W: Write>(mut w: W, matches: &[SignatureMatch]) -> Result<()> {
    for m in matches {
        serde_json::to_writer(&mut w, m)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_matches<R: BufRead>(r: R) -> Result<Vec<SignatureMatch>> {
    let mut out = Vec::new();
    for line in r.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let m: SignatureMatch = serde_json::from_str(&line)?;
        if m.tx_hash.is_empty() || m.ego.is_empty() {
            return Err(Error::invalid("matches", "empty tx_hash or ego"));
        }
        out.push(m);
    }
    Ok(out)
}

/// Cross-validated scores of the pruned trees along a path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathPoint {
    pub alpha: f64,
    pub leaves: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// For every alpha of `path`, prunes a tree grown on each training fold at
/// that alpha and scores it on the held-out fold.
pub fn path_cv(
    ds: &Dataset,
    path: &CcpPath,
    params: &TreeParams,
    k: usize,
    seed: u64,
) -> Result<Vec<PathPoint>> {
    let folds = stratified_kfold(&ds.y, ds.n_classes(), k, seed)?;
    let data = BinnedMatrix::new(&ds.x);
    let n = ds.n_classes();
    let per_fold: Vec<Vec<[f64; 3]>> = folds
        .par_iter()
        .map(|fold| -> Result<Vec<[f64; 3]>> {
            let w = crate::learn::class_weights(&ds.y, &fold.train, n)?;
            let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(0);
            let tree = fit_tree_binned(&data, &ds.y, n, &fold.train, &w, params, &mut rng);
            let fold_path = ccp_path(&tree);
            let truth: Vec<usize> = fold.test.iter().map(|&r| ds.y[r]).collect();
            path.entries
                .iter()
                .map(|e| {
                    let t = select_pruned(&fold_path, PruneTarget::Alpha(e.alpha))?.tree;
                    let pred: Vec<usize> =
                        fold.test.iter().map(|&r| t.predict(ds.x.row(r))).collect();
                    let s = macro_scores(&truth, &pred, n);
                    Ok([s.precision, s.recall, s.f1])
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let m = per_fold.len() as f64;
    Ok(path
        .entries
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let mean = |j: usize| per_fold.iter().map(|f| f[i][j]).sum::<f64>() / m;
            PathPoint {
                alpha: e.alpha,
                leaves: e.n_leaves,
                precision: mean(0),
                recall: mean(1),
                f1: mean(2),
            }
        })
        .collect())
}

pub fn write_path_csv<W: Write>(w: W, points: &[PathPoint]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for p in points {
        wtr.serialize(p)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Graphviz rendering of a pruned tree with leaf signatures attached.
pub fn signature_dot(
    tree: &DecisionTree,
    vocabulary: &Vocabulary,
    classes: &[MethodGroup],
    signatures: Option<&SignatureSet>,
) -> String {
    let mut dot = tree.to_dot(
        |f| vocabulary.column_name(f).to_string(),
        |c| classes[c].to_string(),
    );
    if let Some(set) = signatures {
        let mut extra = String::new();
        for s in set.usable() {
            extra.push_str(&format!(
                "  s{0} [shape=note, label=\"{1}\"];\n  n{0} -> s{0} [style=dashed, arrowhead=none];\n",
                s.leaf,
                s.itemset.keys().join("\\n").replace('"', "\\\"")
            ));
        }
        dot.truncate(dot.len() - 2);
        dot.push_str(&extra);
        dot.push_str("}\n");
    }
    dot
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fv(keys: &[&str]) -> FeatureVector {
        FeatureVector {
            tx_hash: "t".into(),
            ego: "e".into(),
            mode: FeatureMode::ME,
            features: keys.iter().map(|k| (k.to_string(), 1)).collect(),
        }
    }

    fn set(sigs: Vec<(usize, MethodGroup, &[&str])>) -> SignatureSet {
        SignatureSet {
            format: SIGNATURES_FORMAT.into(),
            version: 1,
            mode: FeatureMode::ME,
            threshold: 0.8,
            itemset_mode: ItemsetMode::Greedy,
            signatures: sigs
                .into_iter()
                .map(|(leaf, g, keys)| LeafSignature {
                    leaf,
                    method_group: g,
                    probability: 1.0,
                    samples: 10,
                    itemset: Itemset {
                        items: keys
                            .iter()
                            .map(|k| SignatureItem {
                                key: k.to_string(),
                                support: 1.0,
                            })
                            .collect(),
                        support: 1.0,
                    },
                })
                .collect(),
        }
    }

    #[test]
    fn subset_matching() {
        let s = set(vec![
            (1, MethodGroup::Swap, &["a", "b"]),
            (2, MethodGroup::Mint, &["c"]),
            (3, MethodGroup::Transfer, &[]),
        ]);
        let m = match_signatures(&fv(&["a", "b", "z"]), &s);
        assert_eq!(m.leaves, vec![1]);
        assert_eq!(m.groups, vec![MethodGroup::Swap]);
        assert!(match_signatures(&fv(&["a"]), &s).leaves.is_empty());
        let both = match_signatures(&fv(&["a", "b", "c"]), &s);
        assert_eq!(both.leaves, vec![1, 2]);
    }

    #[test]
    fn zero_counts_are_absent() {
        let s = set(vec![(1, MethodGroup::Swap, &["a"])]);
        let mut v = fv(&["a"]);
        v.features.insert("a".into(), 0);
        assert!(match_signatures(&v, &s).leaves.is_empty());
    }

    #[test]
    fn signature_file_round_trip() {
        let s = set(vec![(4, MethodGroup::Deposit, &["x"])]);
        assert_eq!(SignatureSet::from_json(&s.to_json().unwrap()).unwrap(), s);
        let dup = set(vec![
            (4, MethodGroup::Deposit, &["x"]),
            (4, MethodGroup::Swap, &["y"]),
        ]);
        assert!(SignatureSet::from_json(&dup.to_json().unwrap()).is_err());
    }
}
