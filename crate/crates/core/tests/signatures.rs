use std::collections::BTreeMap;

use motifscope::ingest::MethodGroup;
use motifscope::learn::{fit_model, Classifier, Dataset, DatasetOptions, ModelSpec, TreeParams};
use motifscope::motif::{FeatureMode, FeatureVector};
use motifscope::signatures::{
    ccp_path, is_pruned_subtree, match_all, mine_itemset, mine_signatures, read_matches,
    select_pruned, write_matches, ItemsetMode, PruneTarget, SignatureSet,
};
use motifscope::store::SampleLabel;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn corpus() -> (Vec<FeatureVector>, Vec<SampleLabel>) {
    let groups = [
        (MethodGroup::Swap, &["m3(E,C)", "(E,C)Stablecoin"][..]),
        (MethodGroup::Transfer, &["m1(E,A)"][..]),
        (
            MethodGroup::Borrow,
            &["m2(E,C)", "m2(E,N)", "(N,E)Synthetic"][..],
        ),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut vectors, mut labels) = (Vec::new(), Vec::new());
    for (g, items) in groups {
        for i in 0..80 {
            let tx = format!("0x{}{i:05}", g.index());
            let mut features = BTreeMap::new();
            for it in items {
                if rng.gen_bool(0.97) {
                    features.insert(it.to_string(), 1);
                }
            }
            if rng.gen_bool(0.2) {
                features.insert("(A,E)Other".into(), 1);
            }
            vectors.push(FeatureVector {
                tx_hash: tx.clone(),
                ego: "0xe".into(),
                mode: FeatureMode::ME,
                features,
            });
            labels.push(SampleLabel {
                tx_hash: tx,
                ego: "0xe".into(),
                method_group: g,
            });
        }
    }
    (vectors, labels)
}

fn tree(ds: &Dataset, min_leaf: usize) -> motifscope::learn::DecisionTree {
    let spec = ModelSpec {
        tree: TreeParams {
            min_leaf,
            ..Default::default()
        },
        ..Default::default()
    };
    let rows: Vec<usize> = (0..ds.len()).collect();
    match fit_model(&spec, &ds.x, &ds.y, ds.n_classes(), &rows).unwrap() {
        Classifier::Tree(t) => t,
        _ => unreachable!(),
    }
}

#[test]
fn leaf_targets_select_nested_subtrees() {
    let (v, l) = corpus();
    let ds = Dataset::from_features(&v, &l, DatasetOptions::default()).unwrap();
    let full = tree(&ds, 1);
    let path = ccp_path(&full);
    path.check(&full).unwrap();
    for n in 1..=full.n_leaves() {
        let sel = select_pruned(&path, PruneTarget::Leaves(n)).unwrap();
        assert!(sel.tree.n_leaves() <= n);
        assert!(is_pruned_subtree(&sel.tree, &full));
    }
    let by_alpha = select_pruned(&path, PruneTarget::Alpha(path.entries[1].alpha)).unwrap();
    assert_eq!(by_alpha.index, 1);
    assert!(select_pruned(&path, PruneTarget::Leaves(0)).is_err());
    assert!(select_pruned(&path, PruneTarget::Alpha(-1.0)).is_err());
}

#[test]
fn signatures_recover_the_planted_itemsets() {
    let (v, l) = corpus();
    let ds = Dataset::from_features(&v, &l, DatasetOptions::default()).unwrap();
    let t = tree(&ds, 10);
    let set = mine_signatures(&t, &ds, 0.8, ItemsetMode::Greedy).unwrap();
    let keys = |g: MethodGroup| -> Vec<Vec<String>> {
        set.signatures
            .iter()
            .filter(|s| s.method_group == g)
            .map(|s| s.itemset.keys().into_iter().map(String::from).collect())
            .collect()
    };
    assert!(keys(MethodGroup::Borrow).contains(&vec![
        "(N,E)Synthetic".into(),
        "m2(E,C)".into(),
        "m2(E,N)".into()
    ]));
    assert!(keys(MethodGroup::Transfer).contains(&vec!["m1(E,A)".into()]));

    let back = SignatureSet::from_json(&set.to_json().unwrap()).unwrap();
    assert_eq!(back, set);
    let matches = match_all(&v, &set);
    let mut buf = Vec::new();
    write_matches(&mut buf, &matches).unwrap();
    assert_eq!(read_matches(&buf[..]).unwrap(), matches);
    let exact = matches
        .iter()
        .zip(&l)
        .filter(|(m, l)| m.groups == [l.method_group])
        .count();
    assert!(exact as f64 / l.len() as f64 > 0.85, "{exact}");
}

#[test]
fn exhaustive_agrees_with_greedy_on_nested_items() {
    let samples: Vec<_> = (0..50)
        .map(|i| {
            let mut s = std::collections::BTreeSet::new();
            s.insert("a".to_string());
            if i % 10 != 0 {
                s.insert("b".into());
            }
            if i % 25 != 0 {
                s.insert("c".into());
            }
            s
        })
        .collect();
    let g = mine_itemset(&samples, 0.8, ItemsetMode::Greedy);
    let e = mine_itemset(&samples, 0.8, ItemsetMode::Exhaustive);
    assert_eq!(g.keys(), ["a", "b", "c"]);
    assert_eq!(g, e);
    assert!((g.support - 0.88).abs() < 1e-12);
}

#[test]
fn malformed_signature_files_are_rejected() {
    assert!(SignatureSet::from_json(b"{}").is_err());
    let bad = r#"{"format":"motifscope-signatures","version":1,"mode":"me","threshold":1.5,"itemset_mode":"greedy","signatures":[]}"#;
    assert!(SignatureSet::from_json(bad.as_bytes()).is_err());
}
