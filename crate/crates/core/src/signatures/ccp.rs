//! Minimal cost-complexity pruning.
//!
//! The cost of a node is `R(t) = (W_t / W_root) · gini(t)` with class
//! weighted masses `W`. Each step collapses the internal nodes whose
//! effective alpha `(R(t) − R(T_t)) / (|leaves(T_t)| − 1)` is minimal.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learn::DecisionTree;

/// Alphas within this relative distance of each other are treated as equal.
const ALPHA_RTOL: f64 = 1e-9;

fn tied(a: f64, b: f64) -> bool {
    a <= b + ALPHA_RTOL * b.abs()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CcpEntry {
    pub alpha: f64,
    pub n_leaves: usize,
    /// Total cost `R` of the snapshot's leaves.
    pub impurity: f64,
    pub tree: DecisionTree,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CcpPath {
    pub entries: Vec<CcpEntry>,
}

struct Costs {
    leaf_cost: Vec<f64>,
    subtree_cost: Vec<f64>,
    leaves: Vec<usize>,
}

fn costs(tree: &DecisionTree, collapsed: &[bool]) -> Costs {
    let root_w = tree.nodes[0].weight();
    let n = tree.nodes.len();
    let leaf_cost: Vec<f64> = tree
        .nodes
        .iter()
        .map(|t| {
            if root_w > 0.0 {
                t.weight() / root_w * t.impurity
            } else {
                0.0
            }
        })
        .collect();
    let mut subtree_cost = leaf_cost.clone();
    let mut leaves = vec![1usize; n];
    // Preorder numbering puts children after parents.
    for i in (0..n).rev() {
        if collapsed[i] {
            continue;
        }
        if let Some(s) = &tree.nodes[i].split {
            subtree_cost[i] = subtree_cost[s.left] + subtree_cost[s.right];
            leaves[i] = leaves[s.left] + leaves[s.right];
        }
    }
    Costs {
        leaf_cost,
        subtree_cost,
        leaves,
    }
}

/// Internal nodes of the current pruned tree.
fn live_internal(tree: &DecisionTree, collapsed: &[bool]) -> Vec<usize> {
    let mut out = Vec::new();
    let mut stack = vec![0];
    while let Some(i) = stack.pop() {
        if collapsed[i] {
            continue;
        }
        if let Some(s) = &tree.nodes[i].split {
            out.push(i);
            stack.push(s.left);
            stack.push(s.right);
        }
    }
    out
}

pub fn ccp_path(tree: &DecisionTree) -> CcpPath {
    let mut collapsed = vec![false; tree.nodes.len()];
    let c = costs(tree, &collapsed);
    let mut entries = vec![CcpEntry {
        alpha: 0.0,
        n_leaves: c.leaves[0],
        impurity: c.subtree_cost[0],
        tree: tree.collapse(&collapsed),
    }];
    loop {
        let internal = live_internal(tree, &collapsed);
        if internal.is_empty() {
            break;
        }
        let c = costs(tree, &collapsed);
        let g = |i: usize| (c.leaf_cost[i] - c.subtree_cost[i]) / (c.leaves[i] - 1) as f64;
        let min_g = internal.iter().map(|&i| g(i)).fold(f64::INFINITY, f64::min);
        for &i in &internal {
            if tied(g(i), min_g) {
                collapsed[i] = true;
            }
        }
        let c = costs(tree, &collapsed);
        let entry = CcpEntry {
            alpha: min_g.max(f64::MIN_POSITIVE),
            n_leaves: c.leaves[0],
            impurity: c.subtree_cost[0],
            tree: tree.collapse(&collapsed),
        };
        let len = entries.len();
        let last = entries.last_mut().expect("path starts with the full tree");
        if len > 1 && tied(entry.alpha, last.alpha) {
            // Numerically tied with the previous step: keep the more pruned tree.
            let alpha = last.alpha;
            *last = CcpEntry { alpha, ..entry };
        } else {
            entries.push(entry);
        }
    }
    CcpPath { entries }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PruneTarget {
    Leaves(usize),
    Alpha(f64),
}

#[derive(Debug, Clone)]
pub struct PruneSelection {
    pub index: usize,
    pub alpha: f64,
    pub tree: DecisionTree,
    /// Set when the target could not be met exactly.
    pub warning: Option<String>,
}

/// Picks a snapshot: the smallest alpha with at most `n` leaves, or the
/// largest path alpha not exceeding the requested one.
pub fn select_pruned(path: &CcpPath, target: PruneTarget) -> Result<PruneSelection> {
    let e = &path.entries;
    if e.is_empty() {
        return Err(Error::Model("empty pruning path".into()));
    }
    let (index, warning) = match target {
        PruneTarget::Leaves(0) => {
            return Err(Error::Config("target leaf count must be at least 1".into()))
        }
        PruneTarget::Leaves(n) => {
            let i = e
                .iter()
                .position(|x| x.n_leaves <= n)
                .unwrap_or(e.len() - 1);
            let warning = (e[i].n_leaves != n && n < e[0].n_leaves).then(|| {
                format!(
                    "no pruned tree has exactly {n} leaves; using {} leaves",
                    e[i].n_leaves
                )
            });
            (i, warning)
        }
        PruneTarget::Alpha(a) if !(a >= 0.0) => {
            return Err(Error::Config(format!("alpha must be nonnegative, got {a}")));
        }
        PruneTarget::Alpha(a) => {
            let i = e.iter().rposition(|x| tied(x.alpha, a)).unwrap_or(0);
            (i, None)
        }
    };
    Ok(PruneSelection {
        index,
        alpha: e[index].alpha,
        tree: e[index].tree.clone(),
        warning,
    })
}

/// True when `sub` is `full` with some internal nodes collapsed.
pub fn is_pruned_subtree(sub: &DecisionTree, full: &DecisionTree) -> bool {
    let mut stack = vec![(0usize, 0usize)];
    while let Some((s, f)) = stack.pop() {
        let (a, b) = (&sub.nodes[s], &full.nodes[f]);
        if a.class_weight != b.class_weight || a.n_samples != b.n_samples {
            return false;
        }
        match (&a.split, &b.split) {
            (None, _) => {}
            (Some(_), None) => return false,
            (Some(x), Some(y)) => {
                if x.feature != y.feature || x.threshold != y.threshold {
                    return false;
                }
                stack.push((x.left, y.left));
                stack.push((x.right, y.right));
            }
        }
    }
    true
}

impl CcpPath {
    /// Path monotonicity and snapshot consistency against `full`.
    pub fn check(&self, full: &DecisionTree) -> std::result::Result<(), String> {
        let e = &self.entries;
        let first = e.first().ok_or("empty path")?;
        if first.alpha != 0.0 || first.tree != *full {
            return Err("first entry is not the unpruned tree".into());
        }
        if e.last().map(|x| x.n_leaves) != Some(1) {
            return Err("last entry is not the root".into());
        }
        for w in e.windows(2) {
            if w[1].alpha <= w[0].alpha {
                return Err(format!(
                    "alpha not increasing: {} then {}",
                    w[0].alpha, w[1].alpha
                ));
            }
            if w[1].n_leaves >= w[0].n_leaves {
                return Err(format!(
                    "leaves not decreasing: {} then {}",
                    w[0].n_leaves, w[1].n_leaves
                ));
            }
            if w[1].impurity < w[0].impurity - 1e-12 {
                return Err("impurity decreased along the path".into());
            }
        }
        for x in e {
            if !is_pruned_subtree(&x.tree, full) || x.tree.n_leaves() != x.n_leaves {
                return Err(format!("snapshot at alpha {} is not a subtree", x.alpha));
            }
        }
        Ok(())
    }
}
