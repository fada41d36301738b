//! Ego transfer networks: one directed, typed multigraph per transaction,
//! centred on the ego account.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::ingest::{AccountRegistry, AccountType, TokenCategory, TokenRegistry, Transaction};

/// Node index of the ego in every network.
pub const EGO: usize = 0;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EtnNode {
    pub account: String,
    pub kind: AccountType,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EtnEdge {
    pub source: usize,
    pub target: usize,
    pub category: TokenCategory,
}

/// Directions present between the ego and one neighbour in the collapsed
/// simple digraph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairState {
    /// ego → neighbour only
    Out,
    /// neighbour → ego only
    In,
    /// both directions
    Both,
}

impl PairState {
    pub const ALL: [PairState; 3] = [PairState::Out, PairState::In, PairState::Both];

    pub fn from_flags(out: bool, inc: bool) -> Option<PairState> {
        match (out, inc) {
            (true, false) => Some(PairState::Out),
            (false, true) => Some(PairState::In),
            (true, true) => Some(PairState::Both),
            (false, false) => None,
        }
    }

    pub fn has_out(self) -> bool {
        matches!(self, PairState::Out | PairState::Both)
    }

    pub fn has_in(self) -> bool {
        matches!(self, PairState::In | PairState::Both)
    }

    /// Every direction of `self` is present in `other`.
    pub fn within(self, other: PairState) -> bool {
        (!self.has_out() || other.has_out()) && (!self.has_in() || other.has_in())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Neighbor {
    pub node: usize,
    pub kind: AccountType,
    pub state: PairState,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EgoTransferNetwork {
    pub tx_hash: String,
    /// Node 0 is the ego; the rest are sorted by account id.
    pub nodes: Vec<EtnNode>,
    /// One edge per accepted transfer; parallel edges are kept.
    pub edges: Vec<EtnEdge>,
}

#[derive(Debug, Clone)]
pub struct EtnBuild {
    pub etn: EgoTransferNetwork,
    /// Indices into `tx.transfers` of transfers not touching the ego.
    pub rejected: Vec<usize>,
}

/// Builds the network of one transaction. Counterparts are typed from the
/// account registry (NULL first, then declared contracts, else address);
/// edges carry the token category from the token registry.
pub fn build_etn(tx: &Transaction, accounts: &AccountRegistry, tokens: &TokenRegistry) -> EtnBuild {
    let ego = tx.ego_account.as_str();
    let mut rejected = Vec::new();
    let mut counterparts: Vec<&str> = Vec::with_capacity(tx.transfers.len());
    for (i, t) in tx.transfers.iter().enumerate() {
        if t.from_account == ego && t.to_account != ego {
            counterparts.push(&t.to_account);
        } else if t.to_account == ego && t.from_account != ego {
            counterparts.push(&t.from_account);
        } else {
            rejected.push(i);
        }
    }
    counterparts.sort_unstable();
    counterparts.dedup();

    let mut nodes = Vec::with_capacity(counterparts.len() + 1);
    nodes.push(EtnNode {
        account: ego.to_string(),
        kind: AccountType::Ego,
    });
    nodes.extend(counterparts.iter().map(|&a| EtnNode {
        account: a.to_string(),
        kind: accounts.counterpart_type(a),
    }));

    let index_of = |addr: &str| {
        1 + counterparts
            .binary_search(&addr)
            .expect("counterpart collected above")
    };
    let mut edges = Vec::with_capacity(tx.transfers.len() - rejected.len());
    let mut skip = rejected.iter().peekable();
    for (i, t) in tx.transfers.iter().enumerate() {
        if skip.peek() == Some(&&i) {
            skip.next();
            continue;
        }
        let category = tokens.category(&t.token_contract, &t.token_symbol);
        let (source, target) = if t.from_account == ego {
            (EGO, index_of(&t.to_account))
        } else {
            (index_of(&t.from_account), EGO)
        };
        edges.push(EtnEdge {
            source,
            target,
            category,
        });
    }

    EtnBuild {
        etn: EgoTransferNetwork {
            tx_hash: tx.tx_hash.clone(),
            nodes,
            edges,
        },
        rejected,
    }
}

impl EgoTransferNetwork {
    /// Neighbour of an edge (the endpoint that is not the ego).
    pub fn other_end(edge: &EtnEdge) -> usize {
        if edge.source == EGO {
            edge.target
        } else {
            edge.source
        }
    }

    /// Distinct `(source, target)` pairs: the collapsed simple digraph.
    pub fn simple_view(&self) -> BTreeSet<(usize, usize)> {
        self.edges.iter().map(|e| (e.source, e.target)).collect()
    }

    /// Each neighbour with its direction state relative to the ego.
    pub fn neighbors(&self) -> Vec<Neighbor> {
        let mut flags = vec![(false, false); self.nodes.len()];
        for e in &self.edges {
            if e.source == EGO {
                flags[e.target].0 = true;
            } else {
                flags[e.source].1 = true;
            }
        }
        flags
            .iter()
            .enumerate()
            .skip(1)
            .filter_map(|(node, &(out, inc))| {
                PairState::from_flags(out, inc).map(|state| Neighbor {
                    node,
                    kind: self.nodes[node].kind,
                    state,
                })
            })
            .collect()
    }

    /// Graphviz rendering: node shape by account type, edge label by token
    /// category.
    pub fn to_dot(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "digraph etn {{");
        let _ = writeln!(s, "  label={:?};", self.tx_hash);
        for (i, n) in self.nodes.iter().enumerate() {
            let shape = match n.kind {
                AccountType::Ego => "doublecircle",
                AccountType::Address => "ellipse",
                AccountType::Contract => "box",
                AccountType::Null => "diamond",
            };
            let _ = writeln!(
                s,
                "  n{i} [shape={shape}, label=\"{}\\n{}\"];",
                n.kind.code(),
                n.account.replace('"', "\\\"")
            );
        }
        for e in &self.edges {
            let _ = writeln!(
                s,
                "  n{} -> n{} [label=\"{}\"];",
                e.source, e.target, e.category
            );
        }
        s.push_str("}\n");
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{group_transactions, TokenTransfer};
    use proptest::prelude::*;

    fn t(from: &str, to: &str, sym: &str) -> TokenTransfer {
        TokenTransfer {
            tx_hash: "0xt".into(),
            ego_account: "ego".into(),
            from_account: from.into(),
            to_account: to.into(),
            token_contract: String::new(),
            token_symbol: sym.into(),
            amount: "1".into(),
            block_number: 1,
        }
    }

    fn registries() -> (AccountRegistry, TokenRegistry) {
        let accounts = AccountRegistry::from_json(
            br#"[{"address":"ego","type":"ego"},{"address":"pool","type":"contract"}]"#,
        )
        .unwrap();
        let tokens = TokenRegistry::from_json(
            br#"[{"symbol":"USDC","category":"Stablecoin"},
                 {"symbol":"aUSDC","category":"Synthetic"},
                 {"symbol":"WETH","category":"Cryptocurrency"}]"#,
        )
        .unwrap();
        (accounts, tokens)
    }

    fn etn_of(ts: Vec<TokenTransfer>) -> EtnBuild {
        let (a, tk) = registries();
        let tx = group_transactions(ts).remove(0);
        build_etn(&tx, &a, &tk)
    }

    #[test]
    fn single_edge_to_contract() {
        let b = etn_of(vec![t("ego", "pool", "USDC")]);
        let kinds: Vec<_> = b.etn.nodes.iter().map(|n| n.kind).collect();
        assert_eq!(kinds, vec![AccountType::Ego, AccountType::Contract]);
        assert_eq!(
            b.etn.edges,
            vec![EtnEdge {
                source: 0,
                target: 1,
                category: TokenCategory::Stablecoin
            }]
        );
        assert!(b.rejected.is_empty());
    }

    #[test]
    fn deposit_shape_is_a_reciprocal_pair() {
        let b = etn_of(vec![t("ego", "pool", "USDC"), t("pool", "ego", "aUSDC")]);
        assert_eq!(b.etn.nodes.len(), 2);
        assert_eq!(b.etn.edges.len(), 2);
        let n = b.etn.neighbors();
        assert_eq!(n.len(), 1);
        assert_eq!(n[0].state, PairState::Both);
    }

    #[test]
    fn parallel_edges_collapse_in_simple_view() {
        let b = etn_of(vec![t("alice", "ego", "WETH"), t("alice", "ego", "WETH")]);
        assert_eq!(b.etn.nodes.len(), 2);
        assert_eq!(b.etn.edges.len(), 2);
        // Oracle: distinct (source, target) pairs counted by hand.
        let mut pairs: Vec<(usize, usize)> =
            b.etn.edges.iter().map(|e| (e.source, e.target)).collect();
        pairs.sort();
        pairs.dedup();
        assert_eq!(pairs.len(), 1);
        assert_eq!(b.etn.simple_view().len(), 1);
    }

    #[test]
    fn non_ego_transfer_is_rejected() {
        let b = etn_of(vec![t("ego", "pool", "USDC"), t("alice", "bob", "USDC")]);
        assert_eq!(b.rejected, vec![1]);
        assert_eq!(b.etn.edges.len(), 1);
        assert_eq!(b.etn.nodes.len(), 2);
    }

    #[test]
    fn null_counterpart_is_typed_null() {
        let zero = "0x0000000000000000000000000000000000000000";
        let b = etn_of(vec![t(zero, "ego", "aUSDC")]);
        assert_eq!(b.etn.nodes[1].kind, AccountType::Null);
    }

    #[test]
    fn dot_output_mentions_every_node() {
        let b = etn_of(vec![t("ego", "pool", "USDC"), t("alice", "ego", "WETH")]);
        let dot = b.etn.to_dot();
        assert!(dot.contains("doublecircle"));
        assert!(dot.contains("shape=box"));
        assert!(dot.contains("label=\"Stablecoin\""));
        assert_eq!(dot.matches("->").count(), 2);
    }

    fn arb_transfers() -> impl Strategy<Value = Vec<TokenTransfer>> {
        prop::collection::vec(
            (
                0u8..6,
                prop::bool::ANY,
                prop::sample::select(vec!["USDC", "aUSDC", "WETH", "?"]),
            ),
            1..25,
        )
        .prop_map(|rows| {
            rows.into_iter()
                .map(|(n, out, sym)| {
                    let other = if n == 0 {
                        "pool".to_string()
                    } else {
                        format!("acct{n}")
                    };
                    if out {
                        t("ego", &other, sym)
                    } else {
                        t(&other, "ego", sym)
                    }
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn structural_invariants(ts in arb_transfers()) {
            let n = ts.len();
            let b = etn_of(ts);
            prop_assert_eq!(b.etn.edges.len(), n);
            prop_assert_eq!(b.etn.nodes.iter().filter(|n| n.kind == AccountType::Ego).count(), 1);
            for e in &b.etn.edges {
                prop_assert!(e.source == EGO || e.target == EGO);
                prop_assert!(e.source != e.target);
            }
        }

        #[test]
        fn order_independent(ts in arb_transfers(), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut shuffled = ts.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let a = etn_of(ts).etn;
            let b = etn_of(shuffled).etn;
            prop_assert_eq!(&a.nodes, &b.nodes);
            let mut ea = a.edges.clone();
            let mut eb = b.edges.clone();
            ea.sort();
            eb.sort();
            prop_assert_eq!(ea, eb);
        }
    }
}
