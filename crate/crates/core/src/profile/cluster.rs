//! Agglomerative clustering with Lance–Williams updates and silhouette-based
//! selection of the flat cut.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ProfileTable;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Linkage {
    #[default]
    Ward,
    Complete,
    Average,
}

impl fmt::Display for Linkage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Linkage::Ward => "ward",
            Linkage::Complete => "complete",
            Linkage::Average => "average",
        })
    }
}

impl FromStr for Linkage {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ward" => Ok(Linkage::Ward),
            "complete" => Ok(Linkage::Complete),
            "average" => Ok(Linkage::Average),
            other => Err(Error::Config(format!("unknown linkage '{other}'"))),
        }
    }
}

/// One merge. Leaves are `0..n`; merge `t` creates node `n + t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub height: f64,
    pub size: usize,
}

pub fn euclidean_matrix(points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let v = points[i]
                .iter()
                .zip(&points[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            d[i][j] = v;
            d[j][i] = v;
        }
    }
    d
}

/// Builds the dendrogram from a distance matrix. The closest pair merges
/// first; ties go to the pair with the lowest slot indices.
pub fn linkage(dist: &[Vec<f64>], method: Linkage) -> Vec<Merge> {
    let n = dist.len();
    // Ward works on squared distances.
    let mut d: Vec<Vec<f64>> = match method {
        Linkage::Ward => dist
            .iter()
            .map(|r| r.iter().map(|v| v * v).collect())
            .collect(),
        _ => dist.to_vec(),
    };
    let mut active: Vec<bool> = vec![true; n];
    let mut node: Vec<usize> = (0..n).collect();
    let mut size: Vec<usize> = vec![1; n];
    let mut merges = Vec::with_capacity(n.saturating_sub(1));
    for t in 0..n.saturating_sub(1) {
        let mut best: Option<(usize, usize, f64)> = None;
        for i in 0..n {
            if !active[i] {
                continue;
            }
            for j in i + 1..n {
                if active[j] && best.is_none_or(|b| d[i][j] < b.2) {
                    best = Some((i, j, d[i][j]));
                }
            }
        }
        let (i, j, dij) = best.expect("at least two active clusters");
        let (ni, nj) = (size[i] as f64, size[j] as f64);
        for k in 0..n {
            if !active[k] || k == i || k == j {
                continue;
            }
            let nk = size[k] as f64;
            let v = match method {
                Linkage::Ward => {
                    ((ni + nk) * d[i][k] + (nj + nk) * d[j][k] - nk * dij) / (ni + nj + nk)
                }
                Linkage::Complete => d[i][k].max(d[j][k]),
                Linkage::Average => (ni * d[i][k] + nj * d[j][k]) / (ni + nj),
            };
            d[i][k] = v;
            d[k][i] = v;
        }
        let height = match method {
            Linkage::Ward => dij.max(0.0).sqrt(),
            _ => dij,
        };
        let (a, b) = (node[i].min(node[j]), node[i].max(node[j]));
        merges.push(Merge {
            left: a,
            right: b,
            height,
            size: size[i] + size[j],
        });
        active[j] = false;
        size[i] += size[j];
        node[i] = n + t;
    }
    merges
}

/// Flat assignment into `k` clusters from the first `n − k` merges.
/// Labels are numbered by first appearance in point order.
pub fn cut_tree(merges: &[Merge], n: usize, k: usize) -> Vec<usize> {
    let k = k.clamp(1, n.max(1));
    let mut parent: Vec<usize> = (0..2 * n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for (t, m) in merges.iter().take(n - k).enumerate() {
        let new = n + t;
        let (a, b) = (find(&mut parent, m.left), find(&mut parent, m.right));
        parent[a] = new;
        parent[b] = new;
    }
    let mut labels = vec![0; n];
    let mut seen: Vec<(usize, usize)> = Vec::new();
    for (i, l) in labels.iter_mut().enumerate() {
        let root = find(&mut parent, i);
        *l = match seen.iter().find(|(r, _)| *r == root) {
            Some(&(_, id)) => id,
            None => {
                seen.push((root, seen.len()));
                seen.len() - 1
            }
        };
    }
    labels
}

/// Mean silhouette over all points; singletons score 0.
pub fn silhouette(dist: &[Vec<f64>], labels: &[usize]) -> f64 {
    let n = labels.len();
    if n == 0 {
        return 0.0;
    }
    let k = labels.iter().max().map_or(0, |m| m + 1);
    let mut sizes = vec![0usize; k];
    for &l in labels {
        sizes[l] += 1;
    }
    let mut total = 0.0;
    for i in 0..n {
        if sizes[labels[i]] <= 1 {
            continue;
        }
        let mut sums = vec![0.0; k];
        for j in 0..n {
            if j != i {
                sums[labels[j]] += dist[i][j];
            }
        }
        let a = sums[labels[i]] / (sizes[labels[i]] - 1) as f64;
        let b = (0..k)
            .filter(|&c| c != labels[i] && sizes[c] > 0)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let m = a.max(b);
        if m > 0.0 && b.is_finite() {
            total += (b - a) / m;
        }
    }
    total / n as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClusterOptions {
    pub linkage: Linkage,
    pub k_min: usize,
    pub k_max: usize,
}

impl Default for ClusterOptions {
    fn default() -> Self {
        ClusterOptions {
            linkage: Linkage::Ward,
            k_min: 2,
            k_max: 15,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutScore {
    pub k: usize,
    pub silhouette: f64,
    pub labels: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringResult {
    pub accounts: Vec<String>,
    pub linkage: Linkage,
    pub merges: Vec<Merge>,
    pub cuts: Vec<CutScore>,
    pub chosen_k: usize,
    /// Absent when fewer than three accounts make it undefined.
    pub silhouette: Option<f64>,
    pub labels: Vec<usize>,
    pub warnings: Vec<String>,
}

/// Clusters points (rows) and picks the cut with the highest silhouette,
/// preferring the smaller k on ties.
pub fn cluster_points(
    names: Vec<String>,
    points: &[Vec<f64>],
    opts: &ClusterOptions,
) -> Result<ClusteringResult> {
    let n = points.len();
    if n < 2 {
        return Err(Error::Dataset(format!(
            "clustering needs at least 2 profiles, got {n}"
        )));
    }
    if points.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Dataset("profile values must be finite".into()));
    }
    let dist = euclidean_matrix(points);
    let merges = linkage(&dist, opts.linkage);
    let mut warnings = Vec::new();
    let hi = opts.k_max.min(n - 1);
    let lo = opts.k_min.max(2);
    if hi < lo {
        let msg = if n < 3 {
            format!("silhouette is undefined for {n} accounts; reporting a single cluster")
        } else {
            format!("no k in [{lo}, {hi}]; reporting a single cluster")
        };
        log::warn!("{msg}");
        warnings.push(msg);
        return Ok(ClusteringResult {
            accounts: names,
            linkage: opts.linkage,
            merges,
            cuts: Vec::new(),
            chosen_k: 1,
            silhouette: None,
            labels: vec![0; n],
            warnings,
        });
    }
    let cuts: Vec<CutScore> = (lo..=hi)
        .map(|k| {
            let labels = cut_tree(&merges, n, k);
            CutScore {
                k,
                silhouette: silhouette(&dist, &labels),
                labels,
            }
        })
        .collect();
    let mut best = 0;
    for (i, c) in cuts.iter().enumerate() {
        if c.silhouette > cuts[best].silhouette {
            best = i;
        }
    }
    if dist.iter().flatten().all(|&d| d == 0.0) {
        let msg = "all profiles are identical; silhouette is 0 for every k".to_string();
        log::warn!("{msg}");
        warnings.push(msg);
    }
    Ok(ClusteringResult {
        accounts: names,
        linkage: opts.linkage,
        merges,
        chosen_k: cuts[best].k,
        silhouette: Some(cuts[best].silhouette),
        labels: cuts[best].labels.clone(),
        cuts,
        warnings,
    })
}

pub fn cluster_profiles(table: &ProfileTable, opts: &ClusterOptions) -> Result<ClusteringResult> {
    cluster_points(table.accounts(), &table.zscores(), opts)
}

/// Leaf order of a dendrogram, left subtree first.
pub fn leaf_order(merges: &[Merge], n: usize) -> Vec<usize> {
    if n == 0 {
        return Vec::new();
    }
    if merges.is_empty() {
        return (0..n).collect();
    }
    let mut out = Vec::with_capacity(n);
    let mut stack = vec![n + merges.len() - 1];
    while let Some(x) = stack.pop() {
        if x < n {
            out.push(x);
        } else {
            let m = &merges[x - n];
            stack.push(m.right);
            stack.push(m.left);
        }
    }
    out
}

/// Everything a heat-map tool needs to draw the clustered profile matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClustermapData {
    pub row_order: Vec<String>,
    pub column_order: Vec<usize>,
    pub row_merges: Vec<Merge>,
    pub column_merges: Vec<Merge>,
    /// Z-scores with rows and columns in display order.
    pub matrix: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
}

pub fn clustermap(table: &ProfileTable, result: &ClusteringResult) -> ClustermapData {
    let z = table.zscores();
    let n = z.len();
    let rows = leaf_order(&result.merges, n);
    let width = table.columns.len();
    let cols_t: Vec<Vec<f64>> = (0..width)
        .map(|c| z.iter().map(|r| r[c]).collect())
        .collect();
    let column_merges = if width >= 2 {
        linkage(&euclidean_matrix(&cols_t), result.linkage)
    } else {
        Vec::new()
    };
    let cols = leaf_order(&column_merges, width);
    ClustermapData {
        row_order: rows
            .iter()
            .map(|&r| table.profiles[r].account.clone())
            .collect(),
        column_order: cols.iter().map(|&c| table.columns[c]).collect(),
        row_merges: result.merges.clone(),
        column_merges,
        matrix: rows
            .iter()
            .map(|&r| cols.iter().map(|&c| z[r][c]).collect())
            .collect(),
        labels: rows.iter().map(|&r| result.labels[r]).collect(),
    }
}

impl ClustermapData {
    pub fn matrix_csv(&self) -> String {
        let mut out = String::from("account");
        for c in &self.column_order {
            out.push_str(&format!(",leaf_{c}"));
        }
        out.push('\n');
        for (name, row) in self.row_order.iter().zip(&self.matrix) {
            out.push_str(name);
            for v in row {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn labels_csv(&self) -> String {
        let mut out = String::from("account,cluster\n");
        for (name, l) in self.row_order.iter().zip(&self.labels) {
            out.push_str(&format!("{name},{l}\n"));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_points_one_merge() {
        let d = euclidean_matrix(&[vec![0.0], vec![3.0]]);
        for m in [Linkage::Ward, Linkage::Complete, Linkage::Average] {
            let merges = linkage(&d, m);
            assert_eq!(merges.len(), 1);
            assert!((merges[0].height - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn heights_are_monotone() {
        let pts: Vec<Vec<f64>> = (0..20)
            .map(|i| vec![(i * 7 % 11) as f64, (i * 3 % 5) as f64])
            .collect();
        let d = euclidean_matrix(&pts);
        for m in [Linkage::Ward, Linkage::Complete, Linkage::Average] {
            let merges = linkage(&d, m);
            assert!(
                merges
                    .windows(2)
                    .all(|w| w[1].height >= w[0].height - 1e-12),
                "{m}"
            );
        }
    }

    #[test]
    fn cuts_partition_points() {
        let pts: Vec<Vec<f64>> = vec![vec![0.0], vec![0.1], vec![5.0], vec![5.1], vec![10.0]];
        let merges = linkage(&euclidean_matrix(&pts), Linkage::Ward);
        assert_eq!(cut_tree(&merges, 5, 3), vec![0, 0, 1, 1, 2]);
        assert_eq!(cut_tree(&merges, 5, 1), vec![0; 5]);
        assert_eq!(cut_tree(&merges, 5, 5), vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn identical_points_are_degenerate() {
        let pts = vec![vec![1.0, 1.0]; 6];
        let r = cluster_points(
            (0..6).map(|i| i.to_string()).collect(),
            &pts,
            &ClusterOptions::default(),
        )
        .unwrap();
        assert_eq!(r.chosen_k, 2);
        assert_eq!(r.silhouette, Some(0.0));
        assert!(!r.warnings.is_empty());
    }

    #[test]
    fn two_accounts_give_a_single_cut() {
        let r = cluster_points(
            vec!["a".into(), "b".into()],
            &[vec![0.0], vec![1.0]],
            &ClusterOptions::default(),
        )
        .unwrap();
        assert_eq!(r.chosen_k, 1);
        assert_eq!(r.merges.len(), 1);
        assert!(r.silhouette.is_none());
    }

    #[test]
    fn leaf_order_is_a_permutation() {
        let pts: Vec<Vec<f64>> = (0..9).map(|i| vec![(i * 5 % 9) as f64]).collect();
        let merges = linkage(&euclidean_matrix(&pts), Linkage::Average);
        let mut o = leaf_order(&merges, 9);
        o.sort_unstable();
        assert_eq!(o, (0..9).collect::<Vec<_>>());
    }
}
