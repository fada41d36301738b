//! Method labels (`methods.csv`) and the raw-name to method-group mapping
//! (`method_groups.json`).

use std::collections::BTreeMap;
use std::fmt;
use std::io::Read;
use std::str::FromStr;

use serde::de::{MapAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};

/// The eight method groups used as classification targets, in their
/// global class order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MethodGroup {
    Transfer,
    Swap,
    Withdraw,
    Deposit,
    #[serde(rename = "Claim Reward")]
    ClaimReward,
    Borrow,
    Repay,
    Mint,
}

impl MethodGroup {
    pub const ALL: [MethodGroup; 8] = [
        MethodGroup::Transfer,
        MethodGroup::Swap,
        MethodGroup::Withdraw,
        MethodGroup::Deposit,
        MethodGroup::ClaimReward,
        MethodGroup::Borrow,
        MethodGroup::Repay,
        MethodGroup::Mint,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MethodGroup::Transfer => "Transfer",
            MethodGroup::Swap => "Swap",
            MethodGroup::Withdraw => "Withdraw",
            MethodGroup::Deposit => "Deposit",
            MethodGroup::ClaimReward => "Claim Reward",
            MethodGroup::Borrow => "Borrow",
            MethodGroup::Repay => "Repay",
            MethodGroup::Mint => "Mint",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for MethodGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MethodGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match parse_group_name(s)? {
            Some(g) => Ok(g),
            None => Err(Error::invalid(
                "method group",
                format!("{s:?} is not one of the selected groups"),
            )),
        }
    }
}

/// Resolves a group name from a mapping file. Merged groups fold into their
/// target (Exchange into Swap, Redeem into Withdraw); groups below the
/// support cut (Exit, Burn, Stake) and "Unknown" resolve to `None`.
pub fn parse_group_name(name: &str) -> Result<Option<MethodGroup>> {
    let key: String = name
        .chars()
        .filter(char::is_ascii_alphanumeric)
        .map(|c| c.to_ascii_lowercase())
        .collect();
    Ok(match key.as_str() {
        "transfer" => Some(MethodGroup::Transfer),
        "swap" | "exchange" => Some(MethodGroup::Swap),
        "withdraw" | "redeem" => Some(MethodGroup::Withdraw),
        "deposit" => Some(MethodGroup::Deposit),
        "claimreward" => Some(MethodGroup::ClaimReward),
        "borrow" => Some(MethodGroup::Borrow),
        "repay" => Some(MethodGroup::Repay),
        "mint" => Some(MethodGroup::Mint),
        "exit" | "burn" | "stake" | "unknown" => None,
        _ => {
            return Err(Error::invalid(
                "method group",
                format!("unrecognised group name {name:?}"),
            ))
        }
    })
}

/// Canonical form of a raw method name for lookups.
pub fn normalize_method(raw: &str) -> String {
    raw.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MethodLabel {
    pub tx_hash: String,
    pub raw_method: String,
    /// `None` means Unknown.
    pub method_group: Option<MethodGroup>,
}

/// Raw method name → group. Built once from `method_groups.json`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MethodMapping {
    entries: BTreeMap<String, Option<MethodGroup>>,
}

struct OrderedEntries(Vec<(String, String)>);

impl<'de> Deserialize<'de> for OrderedEntries {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = OrderedEntries;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an object mapping raw method names to group names")
            }

            fn visit_map<A: MapAccess<'de>>(
                self,
                mut map: A,
            ) -> std::result::Result<Self::Value, A::Error> {
                let mut out = Vec::new();
                while let Some((k, v)) = map.next_entry::<String, String>()? {
                    out.push((k, v));
                }
                Ok(OrderedEntries(out))
            }
        }
        d.deserialize_map(V)
    }
}

impl MethodMapping {
    /// Builds a mapping; duplicate raw names (after normalisation) that
    /// disagree on the group are a configuration error.
    pub fn from_pairs<S: AsRef<str>>(pairs: impl IntoIterator<Item = (S, S)>) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (raw, group) in pairs {
            let key = normalize_method(raw.as_ref());
            let group = parse_group_name(group.as_ref())?;
            if let Some(prev) = entries.insert(key.clone(), group) {
                if prev != group {
                    return Err(Error::Config(format!(
                        "method {:?} mapped to conflicting groups",
                        raw.as_ref()
                    )));
                }
            }
        }
        Ok(MethodMapping { entries })
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let OrderedEntries(pairs) = serde_json::from_slice(bytes)?;
        Self::from_pairs(pairs)
    }

    /// Mapping transcribed from the method-group table (names with at
    /// least 100 transactions).
    pub fn builtin() -> Self {
        Self::from_json(include_bytes!("../../data/method_groups.json"))
            .expect("bundled method mapping is valid")
    }

    pub fn group(&self, raw_method: &str) -> Option<MethodGroup> {
        self.entries
            .get(&normalize_method(raw_method))
            .copied()
            .flatten()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelLoad {
    pub labels: Vec<MethodLabel>,
    pub malformed_rows: usize,
    /// Rows repeating a tx_hash with a different raw method; first wins.
    pub conflicting_rows: usize,
}

/// Parses `methods.csv` (`tx_hash,raw_method`). Groups are left unset; see
/// [`group_methods`].
pub fn parse_method_labels<R: Read>(input: R) -> Result<LabelLoad> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(input);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::invalid("methods.csv", format!("missing column {name:?}")))
    };
    let (hash_col, method_col) = (col("tx_hash")?, col("raw_method")?);

    let mut out = LabelLoad::default();
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = match rec {
            Ok(r) => r,
            Err(e) if e.is_io_error() => return Err(e.into()),
            Err(_) => {
                out.malformed_rows += 1;
                continue;
            }
        };
        let (Some(hash), Some(method)) = (rec.get(hash_col), rec.get(method_col)) else {
            out.malformed_rows += 1;
            continue;
        };
        let hash = hash.trim().to_ascii_lowercase();
        let method = method.trim();
        if hash.is_empty() || rec.len() != headers.len() {
            out.malformed_rows += 1;
            continue;
        }
        if let Some(&i) = seen.get(&hash) {
            if out.labels[i].raw_method != method {
                out.conflicting_rows += 1;
            }
            continue;
        }
        seen.insert(hash.clone(), out.labels.len());
        out.labels.push(MethodLabel {
            tx_hash: hash,
            raw_method: method.to_string(),
            method_group: None,
        });
    }
    Ok(out)
}

/// Sets every label's group from the mapping. Unmapped names are Unknown.
pub fn group_methods(labels: Vec<MethodLabel>, mapping: &MethodMapping) -> Vec<MethodLabel> {
    labels
        .into_iter()
        .map(|mut l| {
            l.method_group = mapping.group(&l.raw_method);
            l
        })
        .collect()
}
