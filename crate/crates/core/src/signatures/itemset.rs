//! Maximal frequent itemsets over binarized feature presence.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ItemsetMode {
    /// Grow by descending single-item support, keeping an item only if the
    /// joint support stays above the threshold.
    #[default]
    Greedy,
    /// Longest frequent itemset by full search; ties go to higher joint
    /// support, then to the lexicographically smaller key list.
    Exhaustive,
}

impl std::str::FromStr for ItemsetMode {
    type Err = crate::error::Error;
    fn from_str(s: &str) -> crate::error::Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "greedy" => Ok(ItemsetMode::Greedy),
            "exhaustive" => Ok(ItemsetMode::Exhaustive),
            other => Err(crate::error::Error::Config(format!(
                "unknown itemset mode '{other}'"
            ))),
        }
    }
}

/// Beyond this many frequent single items the exhaustive search falls back
/// to greedy growth.
pub const EXHAUSTIVE_LIMIT: usize = 24;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignatureItem {
    pub key: String,
    /// Fraction of the leaf's samples containing this item.
    pub support: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Itemset {
    /// Sorted by key.
    pub items: Vec<SignatureItem>,
    /// Fraction of samples containing every item.
    pub support: f64,
}

impl Itemset {
    pub fn keys(&self) -> Vec<&str> {
        self.items.iter().map(|i| i.key.as_str()).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

#[derive(Clone)]
struct Bits(Vec<u64>);

impl Bits {
    fn full(n: usize) -> Self {
        let mut v = vec![u64::MAX; n.div_ceil(64)];
        if n % 64 != 0 {
            if let Some(last) = v.last_mut() {
                *last = (1u64 << (n % 64)) - 1;
            }
        }
        Bits(v)
    }

    fn and(&self, o: &Bits) -> Bits {
        Bits(self.0.iter().zip(&o.0).map(|(a, b)| a & b).collect())
    }

    fn count(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }
}

struct Candidates {
    n: usize,
    /// Frequent single items by descending support, then key.
    items: Vec<(String, Bits, usize)>,
}

fn candidates(samples: &[BTreeSet<String>], threshold: f64) -> Candidates {
    let n = samples.len();
    let words = n.div_ceil(64);
    let mut bits: BTreeMap<&str, Bits> = BTreeMap::new();
    for (i, s) in samples.iter().enumerate() {
        for key in s {
            bits.entry(key).or_insert_with(|| Bits(vec![0; words])).0[i / 64] |= 1 << (i % 64);
        }
    }
    let mut items: Vec<(String, Bits, usize)> = bits
        .into_iter()
        .map(|(k, b)| {
            let c = b.count();
            (k.to_string(), b, c)
        })
        .filter(|(_, _, c)| frequent(*c, n, threshold))
        .collect();
    items.sort_by(|a, b| b.2.cmp(&a.2).then_with(|| a.0.cmp(&b.0)));
    Candidates { n, items }
}

fn frequent(count: usize, n: usize, threshold: f64) -> bool {
    n > 0 && count as f64 / n as f64 > threshold
}

fn finish(c: &Candidates, chosen: &[usize], joint: usize) -> Itemset {
    let mut items: Vec<SignatureItem> = chosen
        .iter()
        .map(|&i| SignatureItem {
            key: c.items[i].0.clone(),
            support: c.items[i].2 as f64 / c.n as f64,
        })
        .collect();
    items.sort_by(|a, b| a.key.cmp(&b.key));
    Itemset {
        support: if chosen.is_empty() {
            0.0
        } else {
            joint as f64 / c.n as f64
        },
        items,
    }
}

fn greedy(c: &Candidates, threshold: f64) -> (Vec<usize>, usize) {
    let mut set = Bits::full(c.n);
    let mut joint = c.n;
    let mut chosen = Vec::new();
    // The running intersection only shrinks, so an item rejected once stays
    // rejected; the second pass re-checks every remaining candidate anyway.
    for pass in 0..2 {
        let mut grew = false;
        for (i, (key, bits, _)) in c.items.iter().enumerate() {
            if chosen.contains(&i) {
                continue;
            }
            let next = set.and(bits);
            let count = next.count();
            if frequent(count, c.n, threshold) {
                if pass == 1 {
                    log::debug!("maximality check extended a greedy itemset with {key}");
                }
                set = next;
                joint = count;
                chosen.push(i);
                grew = true;
            }
        }
        if !grew {
            break;
        }
    }
    (chosen, joint)
}

fn exhaustive(c: &Candidates, threshold: f64) -> (Vec<usize>, usize) {
    struct Search<'a> {
        c: &'a Candidates,
        threshold: f64,
        best: (Vec<usize>, usize),
        best_keys: Vec<String>,
    }
    impl Search<'_> {
        fn better(&self, set: &[usize], joint: usize) -> Option<Vec<String>> {
            let (b, bj) = (&self.best.0, self.best.1);
            if set.len() < b.len() || (set.len() == b.len() && joint < bj) {
                return None;
            }
            let mut keys: Vec<String> = set.iter().map(|&i| self.c.items[i].0.clone()).collect();
            keys.sort();
            if set.len() == b.len() && joint == bj && keys >= self.best_keys {
                return None;
            }
            Some(keys)
        }

        fn visit(&mut self, start: usize, set: &mut Vec<usize>, bits: &Bits, joint: usize) {
            if !set.is_empty() {
                if let Some(keys) = self.better(set, joint) {
                    self.best = (set.clone(), joint);
                    self.best_keys = keys;
                }
            }
            for i in start..self.c.items.len() {
                let next = bits.and(&self.c.items[i].1);
                let count = next.count();
                if frequent(count, self.c.n, self.threshold) {
                    set.push(i);
                    self.visit(i + 1, set, &next, count);
                    set.pop();
                }
            }
        }
    }
    let mut s = Search {
        c,
        threshold,
        best: (Vec::new(), 0),
        best_keys: Vec::new(),
    };
    s.visit(0, &mut Vec::new(), &Bits::full(c.n), c.n);
    s.best
}

/// Mines one itemset from presence sets. An empty result means no single
/// item clears the threshold.
pub fn mine_itemset(samples: &[BTreeSet<String>], threshold: f64, mode: ItemsetMode) -> Itemset {
    let c = candidates(samples, threshold);
    let (chosen, joint) = match mode {
        ItemsetMode::Greedy => greedy(&c, threshold),
        ItemsetMode::Exhaustive if c.items.len() > EXHAUSTIVE_LIMIT => {
            log::warn!(
                "{} frequent items exceed the exhaustive limit of {EXHAUSTIVE_LIMIT}; using greedy growth",
                c.items.len()
            );
            greedy(&c, threshold)
        }
        ItemsetMode::Exhaustive => exhaustive(&c, threshold),
    };
    finish(&c, &chosen, joint)
}
