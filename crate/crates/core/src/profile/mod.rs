//! Account profiles built from signature matches, and their clustering.

mod cluster;

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

pub use cluster::{
    cluster_points, cluster_profiles, clustermap, cut_tree, euclidean_matrix, leaf_order, linkage,
    silhouette, ClusterOptions, ClusteringResult, ClustermapData, CutScore, Linkage, Merge,
};

use crate::error::{Error, Result};
use crate::signatures::SignatureMatch;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccountProfile {
    pub account: String,
    /// Transactions of the account matching at least one signature.
    pub matched: u64,
    /// Per-column match counts, aligned with the table's columns.
    pub raw: Vec<u64>,
    /// `raw` divided by its sum.
    pub normalized: Vec<f64>,
    pub zscored: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileTable {
    /// Leaf ids, ascending.
    pub columns: Vec<usize>,
    /// Sorted by account.
    pub profiles: Vec<AccountProfile>,
    /// Accounts left out for having too few matched transactions.
    pub excluded: Vec<(String, u64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfileOptions {
    pub min_matches: u64,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        ProfileOptions { min_matches: 10 }
    }
}

/// Counts matches per (account, leaf) where the account is the sample's ego.
pub fn build_profiles(matches: &[SignatureMatch], opts: ProfileOptions) -> ProfileTable {
    let mut counts: BTreeMap<&str, (u64, BTreeMap<usize, u64>)> = BTreeMap::new();
    for m in matches {
        let entry = counts.entry(m.ego.as_str()).or_default();
        if !m.leaves.is_empty() {
            entry.0 += 1;
        }
        for &l in &m.leaves {
            *entry.1.entry(l).or_default() += 1;
        }
    }
    let mut excluded = Vec::new();
    let mut kept = Vec::new();
    for (account, (matched, leaves)) in counts {
        if matched == 0 || matched < opts.min_matches {
            excluded.push((account.to_string(), matched));
        } else {
            kept.push((account.to_string(), matched, leaves));
        }
    }
    if !excluded.is_empty() {
        log::warn!(
            "{} accounts with fewer than {} matched transactions excluded",
            excluded.len(),
            opts.min_matches.max(1)
        );
    }
    let columns: Vec<usize> = {
        let mut c: Vec<usize> = kept
            .iter()
            .flat_map(|(_, _, l)| l.keys().copied())
            .collect();
        c.sort_unstable();
        c.dedup();
        c
    };
    let rows = kept
        .into_iter()
        .map(|(account, matched, leaves)| {
            let raw = columns
                .iter()
                .map(|c| leaves.get(c).copied().unwrap_or(0))
                .collect();
            (account, matched, raw)
        })
        .collect();
    let mut table = ProfileTable::from_counts(columns, rows);
    table.excluded = excluded;
    table
}

fn zscore_columns(rows: &mut [AccountProfile]) {
    let n = rows.len();
    let width = rows.first().map_or(0, |r| r.normalized.len());
    for r in rows.iter_mut() {
        r.zscored = vec![0.0; width];
    }
    if n < 2 {
        return;
    }
    for c in 0..width {
        let mean = rows.iter().map(|r| r.normalized[c]).sum::<f64>() / n as f64;
        let var = rows
            .iter()
            .map(|r| (r.normalized[c] - mean).powi(2))
            .sum::<f64>()
            / (n - 1) as f64;
        let sd = var.sqrt();
        if sd > 1e-12 * mean.abs().max(1.0) {
            for r in rows.iter_mut() {
                r.zscored[c] = (r.normalized[c] - mean) / sd;
            }
        }
    }
}

impl ProfileTable {
    /// Builds normalized and z-scored views from raw counts.
    pub fn from_counts(columns: Vec<usize>, mut rows: Vec<(String, u64, Vec<u64>)>) -> Self {
        rows.sort_by(|a, b| a.0.cmp(&b.0));
        let mut profiles: Vec<AccountProfile> = rows
            .into_iter()
            .map(|(account, matched, raw)| {
                let total: u64 = raw.iter().sum();
                let normalized = raw
                    .iter()
                    .map(|&v| {
                        if total > 0 {
                            v as f64 / total as f64
                        } else {
                            0.0
                        }
                    })
                    .collect();
                AccountProfile {
                    account,
                    matched,
                    raw,
                    normalized,
                    zscored: Vec::new(),
                }
            })
            .collect();
        zscore_columns(&mut profiles);
        ProfileTable {
            columns,
            profiles,
            excluded: Vec::new(),
        }
    }

    pub fn zscores(&self) -> Vec<Vec<f64>> {
        self.profiles.iter().map(|p| p.zscored.clone()).collect()
    }

    pub fn accounts(&self) -> Vec<String> {
        self.profiles.iter().map(|p| p.account.clone()).collect()
    }
}

/// Raw counts as CSV: `account,matched,leaf_<id>...`.
pub fn write_profiles_csv<W: Write>(w: W, table: &ProfileTable) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    let mut header = vec!["account".to_string(), "matched".to_string()];
    header.extend(table.columns.iter().map(|c| format!("leaf_{c}")));
    wtr.write_record(&header)?;
    for p in &table.profiles {
        let mut rec = vec![p.account.clone(), p.matched.to_string()];
        rec.extend(p.raw.iter().map(u64::to_string));
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_profiles_csv<R: Read>(r: R) -> Result<ProfileTable> {
    let bad = |m: String| Error::invalid("profiles", m);
    let mut rdr = csv::Reader::from_reader(r);
    let header = rdr.headers()?.clone();
    if header.len() < 2 || &header[0] != "account" || &header[1] != "matched" {
        return Err(bad("header must start with account,matched".into()));
    }
    let columns: Vec<usize> = header
        .iter()
        .skip(2)
        .map(|h| {
            h.strip_prefix("leaf_")
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| bad(format!("bad column '{h}'")))
        })
        .collect::<Result<_>>()?;
    let mut sorted = columns.clone();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted != columns {
        return Err(bad("leaf columns must be unique and ascending".into()));
    }
    let mut rows = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let num = |s: &str| {
            s.trim()
                .parse::<u64>()
                .map_err(|_| bad(format!("row {}: bad count '{s}'", i + 1)))
        };
        let account = rec[0].trim().to_string();
        if account.is_empty() || !seen.insert(account.clone()) {
            return Err(bad(format!("row {}: empty or duplicate account", i + 1)));
        }
        let raw: Vec<u64> = rec.iter().skip(2).map(num).collect::<Result<_>>()?;
        rows.push((account, num(&rec[1])?, raw));
    }
    Ok(ProfileTable::from_counts(columns, rows))
}
