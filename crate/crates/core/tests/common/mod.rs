//! Brute-force reference implementations shared by the integration tests.
//! Nothing here calls the library code it checks.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use motifscope::etn::{EgoTransferNetwork, EGO};
use motifscope::ingest::{
    AccountRegistry, AccountType, TokenCategory, TokenInfo, TokenRegistry, TokenTransfer,
    Transaction,
};
use rand::Rng;

pub const EGO_ACCOUNT: &str = "0xe000000000000000000000000000000000000001";

/// Per-role directions (ego → role, role → ego) of each catalog shape, in
/// catalog id order.
pub const SHAPES: [(&str, &[(bool, bool)]); 9] = [
    ("m1", &[(true, false)]),
    ("m2", &[(false, true)]),
    ("m3", &[(true, true)]),
    ("m4", &[(true, false), (true, false)]),
    ("m5", &[(true, false), (false, true)]),
    ("m6", &[(true, false), (true, true)]),
    ("m7", &[(false, true), (false, true)]),
    ("m8", &[(false, true), (true, true)]),
    ("m9", &[(true, true), (true, true)]),
];

const CATEGORIES: [TokenCategory; 4] = [
    TokenCategory::Cryptocurrency,
    TokenCategory::Stablecoin,
    TokenCategory::Synthetic,
    TokenCategory::Other,
];

pub fn token_registry() -> TokenRegistry {
    let entries = CATEGORIES
        .iter()
        .enumerate()
        .map(|(i, &c)| TokenInfo {
            contract: format!("0xt{i:039x}"),
            symbol: format!("T{i}"),
            category: Some(c),
            is_spam: false,
        })
        .collect();
    TokenRegistry::new(entries).unwrap()
}

fn transfer(tx: &str, from: &str, to: &str, token: usize) -> TokenTransfer {
    TokenTransfer {
        tx_hash: tx.into(),
        ego_account: EGO_ACCOUNT.into(),
        from_account: from.into(),
        to_account: to.into(),
        token_contract: format!("0xt{token:039x}"),
        token_symbol: format!("T{token}"),
        amount: "1".into(),
        block_number: 1,
    }
}

/// A transaction whose network has `nodes` nodes (ego included), random
/// neighbour types, directions and parallel edges.
pub fn random_transaction<R: Rng>(
    rng: &mut R,
    nodes: usize,
    tx: &str,
) -> (Transaction, AccountRegistry) {
    let mut accounts = AccountRegistry::new();
    let mut transfers = Vec::new();
    for i in 1..nodes {
        let addr = format!("0xa{i:039x}");
        match rng.gen_range(0..3) {
            0 => {}
            1 => accounts.declare(&addr, AccountType::Contract).unwrap(),
            _ => accounts.declare(&addr, AccountType::Null).unwrap(),
        }
        let (out, inc) = match rng.gen_range(0..3) {
            0 => (true, false),
            1 => (false, true),
            _ => (true, true),
        };
        let mut push = |from: &str, to: &str, rng: &mut R| {
            for _ in 0..rng.gen_range(1..=3) {
                transfers.push(transfer(tx, from, to, rng.gen_range(0..CATEGORIES.len())));
            }
        };
        if out {
            push(EGO_ACCOUNT, &addr, rng);
        }
        if inc {
            push(&addr, EGO_ACCOUNT, rng);
        }
    }
    // Shuffle so edge order carries no information.
    for i in (1..transfers.len()).rev() {
        transfers.swap(i, rng.gen_range(0..=i));
    }
    let t = Transaction {
        tx_hash: tx.into(),
        ego_account: EGO_ACCOUNT.into(),
        transfers,
        raw_method: None,
        method_group: None,
    };
    (t, accounts)
}

/// An ego sending to `n` distinct plain addresses.
pub fn out_star(n: usize) -> Transaction {
    let transfers = (0..n)
        .map(|i| transfer("0xstar", EGO_ACCOUNT, &format!("0xb{i:039x}"), 0))
        .collect();
    Transaction {
        tx_hash: "0xstar".into(),
        ego_account: EGO_ACCOUNT.into(),
        transfers,
        raw_method: None,
        method_group: None,
    }
}

fn code(t: AccountType) -> char {
    match t {
        AccountType::Ego => 'E',
        AccountType::Address => 'A',
        AccountType::Contract => 'C',
        AccountType::Null => 'N',
    }
}

fn key(id: &str, roles: &[(bool, bool)], codes: &[char]) -> String {
    let mut codes = codes.to_vec();
    if roles.len() == 2 && roles[0] == roles[1] {
        codes.sort_unstable();
    }
    let mut k = format!("{id}(E");
    for c in codes {
        k.push(',');
        k.push(c);
    }
    k.push(')');
    k
}

/// Every injective assignment of the shape's roles to `subset`.
fn assignments(subset: &[usize], roles: usize) -> Vec<Vec<usize>> {
    match (subset.len(), roles) {
        (1, 1) => vec![vec![subset[0]]],
        (2, 2) => vec![vec![subset[0], subset[1]], vec![subset[1], subset[0]]],
        _ => Vec::new(),
    }
}

fn role_edges(roles: &[(bool, bool)], nodes: &[usize]) -> BTreeSet<(usize, usize)> {
    let mut s = BTreeSet::new();
    for (&(out, inc), &v) in roles.iter().zip(nodes) {
        if out {
            s.insert((EGO, v));
        }
        if inc {
            s.insert((v, EGO));
        }
    }
    s
}

fn automorphisms(roles: &[(bool, bool)]) -> usize {
    let ids: Vec<usize> = (1..=roles.len()).collect();
    let base = role_edges(roles, &ids);
    assignments(&ids, roles.len())
        .into_iter()
        .filter(|a| role_edges(roles, a) == base)
        .count()
}

/// Typed motif counts by explicit subset enumeration on the collapsed
/// graph. Induced: the subset's edge set must equal the shape's. Non-induced:
/// role maps whose edges are all present, divided by the automorphisms.
pub fn brute_force_counts(etn: &EgoTransferNetwork, induced: bool) -> BTreeMap<String, u64> {
    let edges: BTreeSet<(usize, usize)> = etn.edges.iter().map(|e| (e.source, e.target)).collect();
    let n = etn.nodes.len();
    let mut subsets: Vec<Vec<usize>> = (1..n).map(|i| vec![i]).collect();
    for i in 1..n {
        for j in i + 1..n {
            subsets.push(vec![i, j]);
        }
    }
    let mut out: BTreeMap<String, u64> = BTreeMap::new();
    for (id, roles) in SHAPES {
        let aut = automorphisms(roles) as u64;
        let mut raw: BTreeMap<String, u64> = BTreeMap::new();
        for s in &subsets {
            let induced_edges: BTreeSet<(usize, usize)> = edges
                .iter()
                .filter(|(a, b)| (*a == EGO || s.contains(a)) && (*b == EGO || s.contains(b)))
                .copied()
                .collect();
            let mut seen_here = false;
            for a in assignments(s, roles.len()) {
                let need = role_edges(roles, &a);
                let ok = if induced {
                    need == induced_edges
                } else {
                    need.is_subset(&induced_edges)
                };
                if !ok {
                    continue;
                }
                let codes: Vec<char> = a.iter().map(|&v| code(etn.nodes[v].kind)).collect();
                let k = key(id, roles, &codes);
                if induced {
                    // One occurrence per node subset.
                    if !seen_here {
                        *raw.entry(k).or_default() += aut;
                        seen_here = true;
                    }
                } else {
                    *raw.entry(k).or_default() += 1;
                }
            }
        }
        for (k, c) in raw {
            assert_eq!(
                c % aut,
                0,
                "{k}: {c} maps not divisible by {aut} automorphisms"
            );
            if c > 0 {
                out.insert(k, c / aut);
            }
        }
    }
    out
}

/// Longest itemset (ties: highest joint count) whose joint support is
/// strictly above `threshold`, by trying every subset of present items.
/// Returns `(length, joint count)`; `None` past 20 distinct items.
pub fn max_frequent_itemset(
    samples: &[BTreeSet<String>],
    threshold: f64,
) -> Option<(usize, usize)> {
    let items: Vec<&String> = samples
        .iter()
        .flatten()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if items.len() > 20 {
        return None;
    }
    let mut masks: BTreeMap<u32, usize> = BTreeMap::new();
    for s in samples {
        let m = items
            .iter()
            .enumerate()
            .filter(|(_, k)| s.contains(**k))
            .fold(0u32, |m, (i, _)| m | (1 << i));
        *masks.entry(m).or_default() += 1;
    }
    let n = samples.len();
    let mut best = (0usize, 0usize);
    for subset in 1u32..(1u32 << items.len()) {
        let joint: usize = masks
            .iter()
            .filter(|(m, _)| *m & subset == subset)
            .map(|(_, c)| c)
            .sum();
        if n == 0 || joint as f64 / n as f64 <= threshold {
            continue;
        }
        let len = subset.count_ones() as usize;
        if (len, joint) > best {
            best = (len, joint);
        }
    }
    Some(best)
}

/// Mean silhouette straight from the definition; singleton clusters add 0.
pub fn brute_silhouette(points: &[Vec<f64>], labels: &[usize]) -> f64 {
    let d = |a: &[f64], b: &[f64]| {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    };
    let clusters: BTreeSet<usize> = labels.iter().copied().collect();
    let mut total = 0.0;
    for i in 0..points.len() {
        let own: Vec<usize> = (0..points.len())
            .filter(|&j| j != i && labels[j] == labels[i])
            .collect();
        if own.is_empty() {
            continue;
        }
        let a = own.iter().map(|&j| d(&points[i], &points[j])).sum::<f64>() / own.len() as f64;
        let mut b = f64::INFINITY;
        for &c in clusters.iter().filter(|&&c| c != labels[i]) {
            let other: Vec<usize> = (0..points.len()).filter(|&j| labels[j] == c).collect();
            let mean = other
                .iter()
                .map(|&j| d(&points[i], &points[j]))
                .sum::<f64>()
                / other.len() as f64;
            b = b.min(mean);
        }
        if b.is_finite() && a.max(b) > 0.0 {
            total += (b - a) / a.max(b);
        }
    }
    total / points.len() as f64
}

/// Items present in more than `threshold` of the samples, provided they
/// also co-occur in more than `threshold` of them.
pub fn template_itemset(samples: &[BTreeSet<String>], threshold: f64) -> Option<BTreeSet<String>> {
    let n = samples.len() as f64;
    let mut counts: BTreeMap<&String, usize> = BTreeMap::new();
    for s in samples {
        for k in s {
            *counts.entry(k).or_default() += 1;
        }
    }
    let items: BTreeSet<String> = counts
        .into_iter()
        .filter(|(_, c)| *c as f64 / n > threshold)
        .map(|(k, _)| k.clone())
        .collect();
    let joint = samples.iter().filter(|s| items.is_subset(s)).count();
    (joint as f64 / n > threshold).then_some(items)
}

/// Central finite-difference gradient.
pub fn numeric_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut g = vec![0.0; x.len()];
    let mut p = x.to_vec();
    for i in 0..x.len() {
        p[i] = x[i] + h;
        let up = f(&p);
        p[i] = x[i] - h;
        let down = f(&p);
        p[i] = x[i];
        g[i] = (up - down) / (2.0 * h);
    }
    g
}
