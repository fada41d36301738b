use std::collections::BTreeMap;

use motifscope::ingest::{parse_method_labels, parse_transfers, MethodGroup, TokenRegistry};
use motifscope::synth::{generate, read_truth, GenerateOptions, Skew, SynthConfig, TRUTH_FILE};

fn opts(n: usize, seed: u64) -> GenerateOptions {
    GenerateOptions {
        n,
        seed,
        skew: Skew::Uniform,
        holdout: 0.2,
    }
}

#[test]
fn same_seed_same_bytes() {
    let cfg = SynthConfig::builtin();
    let a = generate(&cfg, &opts(500, 4)).unwrap();
    let b = generate(&cfg, &opts(500, 4)).unwrap();
    let c = generate(&cfg, &opts(500, 5)).unwrap();
    assert_eq!(a.transfers_csv().unwrap(), b.transfers_csv().unwrap());
    assert_eq!(a.truth_csv().unwrap(), b.truth_csv().unwrap());
    assert_ne!(a.transfers_csv().unwrap(), c.transfers_csv().unwrap());
}

#[test]
fn written_corpus_parses_cleanly() {
    let corpus = generate(&SynthConfig::builtin(), &opts(800, 1)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    corpus.write(dir.path()).unwrap();
    let transfers =
        parse_transfers(&std::fs::read(dir.path().join("transfers.csv")).unwrap()[..]).unwrap();
    assert_eq!(transfers.report.rejected, 0);
    assert_eq!(transfers.transfers.len(), corpus.transfers.len());
    TokenRegistry::from_json(&std::fs::read(dir.path().join("tokens.json")).unwrap()).unwrap();
    let methods =
        parse_method_labels(&std::fs::read(dir.path().join("methods.csv")).unwrap()[..]).unwrap();
    let truth = read_truth(&dir.path().join(TRUTH_FILE)).unwrap();
    assert_eq!(truth, corpus.truth);
    // Held-out transactions carry no method label.
    let held = truth.iter().filter(|t| t.holdout).count();
    assert_eq!(methods.labels.len() + held, truth.len());
    let mut per_group: BTreeMap<MethodGroup, usize> = BTreeMap::new();
    for t in &truth {
        *per_group.entry(t.method_group).or_default() += 1;
    }
    assert_eq!(per_group.len(), 8);
    assert!(per_group.values().all(|&n| n == 100));
}

#[test]
fn observed_skew_keeps_rare_groups() {
    let corpus = generate(
        &SynthConfig::builtin(),
        &GenerateOptions {
            n: 20_000,
            seed: 2,
            skew: Skew::Observed,
            holdout: 0.0,
        },
    )
    .unwrap();
    let mut per_group: BTreeMap<MethodGroup, usize> = BTreeMap::new();
    for t in &corpus.truth {
        *per_group.entry(t.method_group).or_default() += 1;
    }
    assert!(per_group[&MethodGroup::Transfer] > 15_000);
    assert!(per_group[&MethodGroup::Mint] >= 40);
    let noisy = corpus.truth.iter().filter(|t| t.noisy).count() as f64 / corpus.truth.len() as f64;
    assert!((noisy - 0.05).abs() < 0.01, "{noisy}");
}

#[test]
fn invalid_configs_are_rejected() {
    let base = String::from_utf8(SynthConfig::builtin().to_json().unwrap()).unwrap();
    let cases = [
        base.replacen("\"noise\": 0.05", "\"noise\": 1.5", 1),
        base.replacen("\"weight\": 0.762255", "\"weight\": 0.5", 1),
        base.replacen("\"Complete Transfer\"", "\"Borrow\"", 1),
        base.replacen("\"from\": \"ego\"", "\"from\": \"c1\"", 1),
        base.replacen("\"egos\"", "\"egos_typo\"", 1),
    ];
    for (i, c) in cases.iter().enumerate() {
        assert_ne!(c, &base, "case {i} did not change the config");
        assert!(
            SynthConfig::from_json(c.as_bytes()).is_err(),
            "case {i} accepted"
        );
    }
    assert!(generate(
        &SynthConfig::builtin(),
        &GenerateOptions {
            holdout: 2.0,
            ..opts(10, 0)
        }
    )
    .is_err());
}
