//! Typed motif counting on the collapsed simple view of an ETN.
//!
//! Because every ETN edge touches the ego, an occurrence is determined by
//! the neighbour set it uses, and the induced digraph on `{E, i, j}` is
//! fixed by the two pair states. Counting therefore reduces to combinatorics
//! over neighbour classes instead of a general subgraph search, which keeps
//! airdrop-sized stars linear in the number of neighbours.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::catalog::{MotifCatalog, ShapePattern};
use crate::etn::{EgoTransferNetwork, Neighbor, PairState};
use crate::ingest::AccountType;

/// How a catalog shape is matched against the collapsed ETN.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchSemantics {
    /// A node subset matches the one shape isomorphic to its induced
    /// subgraph, so occurrences partition the subsets.
    #[default]
    Induced,
    /// Subgraph monomorphisms divided by the shape's automorphisms.
    NonInduced,
}

impl std::str::FromStr for MatchSemantics {
    type Err = crate::error::Error;
    fn from_str(s: &str) -> crate::error::Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "induced" => Ok(MatchSemantics::Induced),
            "non_induced" | "noninduced" => Ok(MatchSemantics::NonInduced),
            other => Err(crate::error::Error::Config(format!(
                "unknown match semantics '{other}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TypedMotifCount {
    pub key: String,
    pub count: u64,
}

/// Shape id of a typed or combined key (`m5(E,A,C)` → `m5`).
pub fn shape_id(key: &str) -> &str {
    key.split('(').next().unwrap_or(key)
}

pub(crate) fn compatible(pattern: PairState, state: PairState, semantics: MatchSemantics) -> bool {
    match semantics {
        MatchSemantics::Induced => pattern == state,
        MatchSemantics::NonInduced => pattern.within(state),
    }
}

/// Per-role descriptor of a matched neighbour: its type plus whatever the
/// caller wants to key on.
pub(crate) trait Describe {
    type Desc: Ord + Clone;
    fn describe(&self, n: &Neighbor, pattern: PairState) -> Self::Desc;
    fn kind(desc: &Self::Desc) -> AccountType;
}

/// Enumerates occurrence classes of one shape. `emit` receives the role
/// descriptors (in role order) and a signed multiplicity; negative values
/// remove double-counted same-node pairs under non-induced matching.
pub(crate) fn tally_shape<D: Describe>(
    neighbors: &[Neighbor],
    pattern: ShapePattern,
    semantics: MatchSemantics,
    describer: &D,
    mut emit: impl FnMut(&[&D::Desc], i64),
) {
    let classes = |p: PairState| {
        let mut m: BTreeMap<D::Desc, i64> = BTreeMap::new();
        for n in neighbors
            .iter()
            .filter(|n| compatible(p, n.state, semantics))
        {
            *m.entry(describer.describe(n, p)).or_default() += 1;
        }
        m
    };
    match pattern {
        ShapePattern::Dyad(p) => {
            for (d, n) in &classes(p) {
                emit(&[d], *n);
            }
        }
        ShapePattern::Triad(p, q) if p == q => {
            let cls: Vec<_> = classes(p).into_iter().collect();
            for (a, (da, na)) in cls.iter().enumerate() {
                if *na >= 2 {
                    emit(&[da, da], na * (na - 1) / 2);
                }
                for (db, nb) in &cls[a + 1..] {
                    emit(&[da, db], na * nb);
                }
            }
        }
        ShapePattern::Triad(p, q) => {
            let (ci, cj) = (classes(p), classes(q));
            for (da, na) in &ci {
                for (db, nb) in &cj {
                    emit(&[da, db], na * nb);
                }
            }
            // A node compatible with both roles was paired with itself.
            for n in neighbors {
                if compatible(p, n.state, semantics) && compatible(q, n.state, semantics) {
                    emit(&[&describer.describe(n, p), &describer.describe(n, q)], -1);
                }
            }
        }
    }
}

struct ByType;

impl Describe for ByType {
    type Desc = AccountType;
    fn describe(&self, n: &Neighbor, _: PairState) -> AccountType {
        n.kind
    }
    fn kind(desc: &AccountType) -> AccountType {
        *desc
    }
}

/// Typed key `id(E,t_i[,t_j])`; symmetric shapes list neighbour types in
/// sorted order.
pub(crate) fn typed_key(id: &str, pattern: ShapePattern, kinds: &[AccountType]) -> String {
    let mut codes: Vec<char> = kinds.iter().map(|k| k.code()).collect();
    if pattern.is_symmetric() {
        codes.sort_unstable();
    }
    let mut key = String::with_capacity(id.len() + 8);
    key.push_str(id);
    key.push_str("(E");
    for c in codes {
        key.push(',');
        key.push(c);
    }
    key.push(')');
    key
}

fn collect_nonzero(acc: BTreeMap<String, i64>) -> Vec<TypedMotifCount> {
    acc.into_iter()
        .filter(|(_, c)| *c != 0)
        .map(|(key, count)| TypedMotifCount {
            key,
            count: u64::try_from(count).expect("occurrence counts are nonnegative"),
        })
        .collect()
}

/// Typed occurrence counts of every catalog shape, nonzero keys only,
/// sorted by key.
pub fn count_motifs(
    etn: &EgoTransferNetwork,
    catalog: &MotifCatalog,
    semantics: MatchSemantics,
) -> Vec<TypedMotifCount> {
    let neighbors = etn.neighbors();
    let mut acc: BTreeMap<String, i64> = BTreeMap::new();
    for entry in catalog.entries() {
        tally_shape(&neighbors, entry.pattern, semantics, &ByType, |descs, n| {
            let kinds: Vec<AccountType> = descs.iter().map(|d| ByType::kind(d)).collect();
            *acc.entry(typed_key(&entry.shape.id, entry.pattern, &kinds))
                .or_default() += n;
        });
    }
    collect_nonzero(acc)
}

/// Untyped occurrence count per catalog shape (catalog order, zeros kept),
/// computed directly from neighbour state tallies.
pub fn count_untyped(
    etn: &EgoTransferNetwork,
    catalog: &MotifCatalog,
    semantics: MatchSemantics,
) -> Vec<(String, u64)> {
    let states: Vec<PairState> = etn.neighbors().iter().map(|n| n.state).collect();
    let matching = |p: PairState| {
        states
            .iter()
            .filter(|&&s| compatible(p, s, semantics))
            .count() as u64
    };
    catalog
        .entries()
        .iter()
        .map(|e| {
            let c = match e.pattern {
                ShapePattern::Dyad(p) => matching(p),
                ShapePattern::Triad(p, q) if p == q => {
                    let m = matching(p);
                    m * m.saturating_sub(1) / 2
                }
                ShapePattern::Triad(p, q) => {
                    let both = states
                        .iter()
                        .filter(|&&s| compatible(p, s, semantics) && compatible(q, s, semantics))
                        .count() as u64;
                    matching(p) * matching(q) - both
                }
            };
            (e.shape.id.clone(), c)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::etn::{EtnEdge, EtnNode, EGO};
    use crate::ingest::TokenCategory;
    use crate::motif::enumerate_catalog;

    fn star(kinds_out: &[AccountType], kinds_in: &[AccountType]) -> EgoTransferNetwork {
        let mut nodes = vec![EtnNode {
            account: "ego".into(),
            kind: AccountType::Ego,
        }];
        let mut edges = Vec::new();
        for (k, &kind) in kinds_out.iter().chain(kinds_in).enumerate() {
            nodes.push(EtnNode {
                account: format!("n{k}"),
                kind,
            });
            let idx = nodes.len() - 1;
            let (source, target) = if k < kinds_out.len() {
                (EGO, idx)
            } else {
                (idx, EGO)
            };
            edges.push(EtnEdge {
                source,
                target,
                category: TokenCategory::Stablecoin,
            });
        }
        EgoTransferNetwork {
            tx_hash: "t".into(),
            nodes,
            edges,
        }
    }

    fn as_map(v: Vec<TypedMotifCount>) -> BTreeMap<String, u64> {
        v.into_iter().map(|c| (c.key, c.count)).collect()
    }

    #[test]
    fn single_out_edge() {
        let cat = enumerate_catalog();
        let m = as_map(count_motifs(
            &star(&[AccountType::Contract], &[]),
            &cat,
            MatchSemantics::Induced,
        ));
        assert_eq!(m, BTreeMap::from([("m1(E,C)".to_string(), 1)]));
    }

    #[test]
    fn out_star_of_three_addresses() {
        use AccountType::Address as A;
        let cat = enumerate_catalog();
        let m = as_map(count_motifs(
            &star(&[A, A, A], &[]),
            &cat,
            MatchSemantics::Induced,
        ));
        assert_eq!(
            m,
            BTreeMap::from([("m1(E,A)".to_string(), 3), ("m4(E,A,A)".to_string(), 3)])
        );
    }

    #[test]
    fn symmetric_keys_are_sorted_and_asymmetric_keep_role_order() {
        use AccountType::*;
        let cat = enumerate_catalog();
        let m = as_map(count_motifs(
            &star(&[Null, Contract], &[Address]),
            &cat,
            MatchSemantics::Induced,
        ));
        assert_eq!(m.get("m4(E,C,N)"), Some(&1));
        assert_eq!(m.get("m4(E,N,C)"), None);
        // m5 is (out, in): the out-neighbour fills role i.
        assert_eq!(m.get("m5(E,C,A)"), Some(&1));
        assert_eq!(m.get("m5(E,N,A)"), Some(&1));
    }

    #[test]
    fn non_induced_counts_subpatterns_of_reciprocal_pairs() {
        let etn = EgoTransferNetwork {
            tx_hash: "t".into(),
            nodes: vec![
                EtnNode {
                    account: "e".into(),
                    kind: AccountType::Ego,
                },
                EtnNode {
                    account: "c".into(),
                    kind: AccountType::Contract,
                },
            ],
            edges: vec![
                EtnEdge {
                    source: 0,
                    target: 1,
                    category: TokenCategory::Stablecoin,
                },
                EtnEdge {
                    source: 1,
                    target: 0,
                    category: TokenCategory::Synthetic,
                },
            ],
        };
        let cat = enumerate_catalog();
        let induced = as_map(count_motifs(&etn, &cat, MatchSemantics::Induced));
        assert_eq!(induced, BTreeMap::from([("m3(E,C)".to_string(), 1)]));
        let loose = as_map(count_motifs(&etn, &cat, MatchSemantics::NonInduced));
        assert_eq!(
            loose,
            BTreeMap::from([
                ("m1(E,C)".to_string(), 1),
                ("m2(E,C)".to_string(), 1),
                ("m3(E,C)".to_string(), 1)
            ])
        );
    }

    #[test]
    fn shape_id_prefix() {
        assert_eq!(shape_id("m12(E,A,C)"), "m12");
        assert_eq!(shape_id("m3(E,C)|(E,C)Stablecoin"), "m3");
    }
}
