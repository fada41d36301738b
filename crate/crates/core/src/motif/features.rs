//! Edge-list features, motif×edge combinations and the four feature modes.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::catalog::MotifCatalog;
use super::count::{
    count_motifs, tally_shape, typed_key, Describe, MatchSemantics, TypedMotifCount,
};
use crate::error::{Error, Result};
use crate::etn::{build_etn, EgoTransferNetwork, Neighbor, PairState, EGO};
use crate::ingest::{AccountRegistry, AccountType, TokenRegistry, Transaction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FeatureMode {
    /// Typed motif counts.
    #[serde(alias = "m")]
    M,
    /// Typed edge counts.
    #[serde(alias = "e")]
    E,
    /// Both key spaces side by side.
    #[serde(alias = "me")]
    ME,
    /// One key per motif occurrence class joined with its edge labels.
    #[serde(alias = "mxe")]
    MxE,
}

impl FeatureMode {
    pub const ALL: [FeatureMode; 4] = [
        FeatureMode::M,
        FeatureMode::E,
        FeatureMode::ME,
        FeatureMode::MxE,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureMode::M => "M",
            FeatureMode::E => "E",
            FeatureMode::ME => "ME",
            FeatureMode::MxE => "MxE",
        }
    }
}

impl fmt::Display for FeatureMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "M" => Ok(FeatureMode::M),
            "E" => Ok(FeatureMode::E),
            "ME" | "M+E" => Ok(FeatureMode::ME),
            "MXE" | "M*E" => Ok(FeatureMode::MxE),
            _ if s.trim() == "M×E" => Ok(FeatureMode::MxE),
            _ => Err(Error::Config(format!("unknown feature mode {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EdgeFeature {
    pub key: String,
    pub count: u64,
}

fn edge_label(source: AccountType, target: AccountType, category: impl fmt::Display) -> String {
    format!("({},{}){}", source.code(), target.code(), category)
}

/// Transfers per `(S,T){category}` signature, parallel edges included.
pub fn edge_features(etn: &EgoTransferNetwork) -> Vec<EdgeFeature> {
    let mut acc: BTreeMap<String, u64> = BTreeMap::new();
    for e in &etn.edges {
        let key = edge_label(
            etn.nodes[e.source].kind,
            etn.nodes[e.target].kind,
            e.category,
        );
        *acc.entry(key).or_default() += 1;
    }
    acc.into_iter()
        .map(|(key, count)| EdgeFeature { key, count })
        .collect()
}

/// Neighbour descriptor carrying the edge labels the occurrence uses.
struct WithEdges {
    out_labels: Vec<Vec<String>>,
    in_labels: Vec<Vec<String>>,
}

impl WithEdges {
    fn new(etn: &EgoTransferNetwork) -> Self {
        let n = etn.nodes.len();
        let (mut out_labels, mut in_labels) = (vec![Vec::new(); n], vec![Vec::new(); n]);
        for e in &etn.edges {
            let label = edge_label(
                etn.nodes[e.source].kind,
                etn.nodes[e.target].kind,
                e.category,
            );
            if e.source == EGO {
                out_labels[e.target].push(label);
            } else {
                in_labels[e.source].push(label);
            }
        }
        WithEdges {
            out_labels,
            in_labels,
        }
    }
}

impl Describe for WithEdges {
    type Desc = (AccountType, Vec<String>);

    fn describe(&self, n: &Neighbor, pattern: PairState) -> Self::Desc {
        let mut labels = Vec::new();
        if pattern.has_out() {
            labels.extend(self.out_labels[n.node].iter().cloned());
        }
        if pattern.has_in() {
            labels.extend(self.in_labels[n.node].iter().cloned());
        }
        labels.sort_unstable();
        (n.kind, labels)
    }

    fn kind(desc: &Self::Desc) -> AccountType {
        desc.0
    }
}

/// Motif×edge keys: `typedkey|label|label...` with the multiset of the
/// occurrence's edge labels in sorted order, counted per occurrence.
pub fn motif_edge_features(
    etn: &EgoTransferNetwork,
    catalog: &MotifCatalog,
    semantics: MatchSemantics,
) -> Vec<TypedMotifCount> {
    let neighbors = etn.neighbors();
    let describer = WithEdges::new(etn);
    let mut acc: BTreeMap<String, i64> = BTreeMap::new();
    for entry in catalog.entries() {
        tally_shape(
            &neighbors,
            entry.pattern,
            semantics,
            &describer,
            |descs, n| {
                let kinds: Vec<AccountType> = descs.iter().map(|d| d.0).collect();
                let mut labels: Vec<&str> = descs
                    .iter()
                    .flat_map(|d| d.1.iter().map(String::as_str))
                    .collect();
                labels.sort_unstable();
                let mut key = typed_key(&entry.shape.id, entry.pattern, &kinds);
                for l in labels {
                    key.push('|');
                    key.push_str(l);
                }
                *acc.entry(key).or_default() += n;
            },
        );
    }
    acc.into_iter()
        .filter(|(_, c)| *c != 0)
        .map(|(key, count)| TypedMotifCount {
            key,
            count: count as u64,
        })
        .collect()
}

/// Sparse feature vector of one `(tx_hash, ego)` sample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub tx_hash: String,
    pub ego: String,
    pub mode: FeatureMode,
    pub features: BTreeMap<String, u64>,
}

impl FeatureVector {
    pub fn sample_id(&self) -> (&str, &str) {
        (&self.tx_hash, &self.ego)
    }
}

/// Combines precomputed feature families into the requested mode. `combined`
/// is only consulted for [`FeatureMode::MxE`].
pub fn assemble_features(
    tx_hash: &str,
    ego: &str,
    motifs: &[TypedMotifCount],
    edges: &[EdgeFeature],
    combined: &[TypedMotifCount],
    mode: FeatureMode,
) -> FeatureVector {
    let motif_iter = || motifs.iter().map(|m| (m.key.clone(), m.count));
    let edge_iter = || edges.iter().map(|e| (e.key.clone(), e.count));
    let features: BTreeMap<String, u64> = match mode {
        FeatureMode::M => motif_iter().collect(),
        FeatureMode::E => edge_iter().collect(),
        FeatureMode::ME => motif_iter().chain(edge_iter()).collect(),
        FeatureMode::MxE => combined.iter().map(|m| (m.key.clone(), m.count)).collect(),
    };
    FeatureVector {
        tx_hash: tx_hash.to_string(),
        ego: ego.to_string(),
        mode,
        features,
    }
}

#[derive(Debug, Clone)]
pub struct Featurizer {
    pub catalog: MotifCatalog,
    pub semantics: MatchSemantics,
    pub mode: FeatureMode,
}

#[derive(Debug, Clone, Default)]
pub struct FeaturizeOutput {
    pub vectors: Vec<FeatureVector>,
    /// Transfers dropped because neither endpoint was the ego.
    pub rejected_edges: usize,
}

impl Featurizer {
    pub fn new(catalog: MotifCatalog, semantics: MatchSemantics, mode: FeatureMode) -> Self {
        Featurizer {
            catalog,
            semantics,
            mode,
        }
    }

    pub fn featurize_etn(&self, etn: &EgoTransferNetwork, ego: &str) -> FeatureVector {
        let wants_motifs = matches!(self.mode, FeatureMode::M | FeatureMode::ME);
        let wants_edges = matches!(self.mode, FeatureMode::E | FeatureMode::ME);
        let motifs = if wants_motifs {
            count_motifs(etn, &self.catalog, self.semantics)
        } else {
            Vec::new()
        };
        let edges = if wants_edges {
            edge_features(etn)
        } else {
            Vec::new()
        };
        let combined = if self.mode == FeatureMode::MxE {
            motif_edge_features(etn, &self.catalog, self.semantics)
        } else {
            Vec::new()
        };
        assemble_features(&etn.tx_hash, ego, &motifs, &edges, &combined, self.mode)
    }

    pub fn featurize(
        &self,
        tx: &Transaction,
        accounts: &AccountRegistry,
        tokens: &TokenRegistry,
    ) -> (FeatureVector, usize) {
        let built = build_etn(tx, accounts, tokens);
        (
            self.featurize_etn(&built.etn, &tx.ego_account),
            built.rejected.len(),
        )
    }

    /// Parallel over transactions; output order follows input order, so the
    /// result does not depend on the thread count.
    pub fn featurize_all(
        &self,
        transactions: &[Transaction],
        accounts: &AccountRegistry,
        tokens: &TokenRegistry,
    ) -> FeaturizeOutput {
        let results: Vec<(FeatureVector, usize)> = transactions
            .par_iter()
            .map(|tx| self.featurize(tx, accounts, tokens))
            .collect();
        let rejected_edges = results.iter().map(|r| r.1).sum();
        FeaturizeOutput {
            vectors: results.into_iter().map(|r| r.0).collect(),
            rejected_edges,
        }
    }
}

pub fn write_features<W: Write>(mut w: W, vectors: &[FeatureVector]) -> Result<()> {
    for v in vectors {
        serde_json::to_writer(&mut w, v)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a features JSON-lines file; blank lines are skipped.
pub fn read_features<R: BufRead>(r: R) -> Result<Vec<FeatureVector>> {
    let mut out = Vec::new();
    let mut mode = None;
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let v: FeatureVector = serde_json::from_str(&line)?;
        if v.tx_hash.is_empty() {
            return Err(Error::invalid(
                "features",
                format!("line {}: empty tx_hash", i + 1),
            ));
        }
        match mode {
            None => mode = Some(v.mode),
            Some(m) if m != v.mode => {
                return Err(Error::invalid(
                    "features",
                    format!("line {}: mixed feature modes {m} and {}", i + 1, v.mode),
                ))
            }
            _ => {}
        }
        out.push(v);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::etn::{EtnEdge, EtnNode};
    use crate::ingest::TokenCategory;
    use crate::motif::enumerate_catalog;

    fn etn(neigh: &[(AccountType, bool, TokenCategory)]) -> EgoTransferNetwork {
        // (kind, outgoing, category); equal kinds with consecutive entries
        // are separate nodes unless the caller reuses an index.
        let mut nodes = vec![EtnNode {
            account: "ego".into(),
            kind: AccountType::Ego,
        }];
        let mut edges = Vec::new();
        for (k, &(kind, out, category)) in neigh.iter().enumerate() {
            nodes.push(EtnNode {
                account: format!("n{k}"),
                kind,
            });
            let i = k + 1;
            let (source, target) = if out { (EGO, i) } else { (i, EGO) };
            edges.push(EtnEdge {
                source,
                target,
                category,
            });
        }
        EgoTransferNetwork {
            tx_hash: "t".into(),
            nodes,
            edges,
        }
    }

    fn deposit() -> EgoTransferNetwork {
        EgoTransferNetwork {
            tx_hash: "t".into(),
            nodes: vec![
                EtnNode {
                    account: "ego".into(),
                    kind: AccountType::Ego,
                },
                EtnNode {
                    account: "pool".into(),
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
        }
    }

    #[test]
    fn single_edge_features() {
        let e = etn(&[(AccountType::Contract, true, TokenCategory::Stablecoin)]);
        assert_eq!(
            edge_features(&e),
            vec![EdgeFeature {
                key: "(E,C)Stablecoin".into(),
                count: 1
            }]
        );
        let f = |mode| {
            Featurizer::new(enumerate_catalog(), MatchSemantics::Induced, mode)
                .featurize_etn(&e, "ego")
        };
        assert_eq!(f(FeatureMode::M).features.len(), 1);
        assert_eq!(f(FeatureMode::E).features.len(), 1);
        assert_eq!(f(FeatureMode::ME).features.len(), 2);
    }

    #[test]
    fn parallel_edges_count_multiplicity() {
        let mut e = etn(&[(AccountType::Address, false, TokenCategory::Cryptocurrency)]);
        e.edges.push(e.edges[0]);
        assert_eq!(
            edge_features(&e),
            vec![EdgeFeature {
                key: "(A,E)Cryptocurrency".into(),
                count: 2
            }]
        );
    }

    #[test]
    fn deposit_motif_by_edge_key() {
        // Hand enumeration: one subset {E, pool}, reciprocal shape m3, edges
        // (E,C)Stablecoin and (C,E)Synthetic.
        let v = motif_edge_features(&deposit(), &enumerate_catalog(), MatchSemantics::Induced);
        assert_eq!(
            v,
            vec![TypedMotifCount {
                key: "m3(E,C)|(C,E)Synthetic|(E,C)Stablecoin".into(),
                count: 1
            }]
        );
    }

    #[test]
    fn mxe_on_a_star_joins_both_neighbours_edges() {
        use AccountType::*;
        use TokenCategory::*;
        let e = etn(&[(Contract, true, Stablecoin), (Null, false, Synthetic)]);
        let got: BTreeMap<_, _> =
            motif_edge_features(&e, &enumerate_catalog(), MatchSemantics::Induced)
                .into_iter()
                .map(|c| (c.key, c.count))
                .collect();
        let want = BTreeMap::from([
            ("m1(E,C)|(E,C)Stablecoin".to_string(), 1),
            ("m2(E,N)|(N,E)Synthetic".to_string(), 1),
            ("m5(E,C,N)|(E,C)Stablecoin|(N,E)Synthetic".to_string(), 1),
        ]);
        assert_eq!(got, want);
    }

    #[test]
    fn mode_parsing() {
        for m in FeatureMode::ALL {
            assert_eq!(m.as_str().parse::<FeatureMode>().unwrap(), m);
        }
        assert_eq!("M+E".parse::<FeatureMode>().unwrap(), FeatureMode::ME);
        assert_eq!("M×E".parse::<FeatureMode>().unwrap(), FeatureMode::MxE);
        assert!("Q".parse::<FeatureMode>().is_err());
    }

    #[test]
    fn features_jsonl_round_trip() {
        let f = Featurizer::new(
            enumerate_catalog(),
            MatchSemantics::Induced,
            FeatureMode::ME,
        );
        let v = vec![f.featurize_etn(&deposit(), "ego")];
        let mut buf = Vec::new();
        write_features(&mut buf, &v).unwrap();
        assert_eq!(read_features(&buf[..]).unwrap(), v);
    }

    #[test]
    fn mixed_modes_are_rejected() {
        let a = r#"{"tx_hash":"a","ego":"e","mode":"M","features":{}}"#;
        let b = r#"{"tx_hash":"b","ego":"e","mode":"E","features":{}}"#;
        assert!(read_features(format!("{a}\n{b}\n").as_bytes()).is_err());
    }
}
