//! Weighted-Gini CART grown best-first.
//!
//! Candidate thresholds are midpoints between consecutive distinct training
//! values of a feature, and `x <= threshold` goes left. Among equal gains
//! the lowest feature index wins, then the lowest threshold. Growth stops
//! when no admissible split strictly lowers the weighted impurity or when
//! `max_leaves` is reached.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dataset::Matrix;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    #[default]
    All,
    /// `max(1, ⌊√F⌋)` features drawn per split.
    Sqrt,
    Count(usize),
}

impl MaxFeatures {
    pub fn resolve(self, n_features: usize) -> usize {
        let k = match self {
            MaxFeatures::All => n_features,
            MaxFeatures::Sqrt => (n_features as f64).sqrt().floor() as usize,
            MaxFeatures::Count(k) => k,
        };
        k.clamp(1, n_features.max(1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeParams {
    /// Minimum number of training rows in a leaf.
    pub min_leaf: usize,
    pub max_leaves: Option<usize>,
    pub max_features: MaxFeatures,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            min_leaf: 10,
            max_leaves: None,
            max_features: MaxFeatures::All,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    pub left: usize,
    pub right: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    /// Weighted class mass reaching the node.
    pub class_weight: Vec<f64>,
    pub n_samples: usize,
    /// Weighted Gini impurity.
    pub impurity: f64,
    pub split: Option<Split>,
}

impl TreeNode {
    pub fn weight(&self) -> f64 {
        self.class_weight.iter().sum()
    }

    pub fn is_leaf(&self) -> bool {
        self.split.is_none()
    }

    /// Majority class by weight; ties go to the lowest index.
    pub fn class(&self) -> usize {
        super::logistic::argmax(&self.class_weight)
    }

    /// Weighted purity of the majority class.
    pub fn probability(&self) -> f64 {
        let w = self.weight();
        if w > 0.0 {
            self.class_weight[self.class()] / w
        } else {
            0.0
        }
    }
}

/// Nodes are numbered in preorder; the root is node 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<TreeNode>,
    pub n_classes: usize,
    pub n_features: usize,
}

fn gini(w: &[f64]) -> f64 {
    let total: f64 = w.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    1.0 - w.iter().map(|v| (v / total) * (v / total)).sum::<f64>()
}

impl DecisionTree {
    pub fn leaf_of(&self, row: &[f64]) -> usize {
        let mut n = 0;
        while let Some(s) = &self.nodes[n].split {
            n = if row[s.feature] <= s.threshold {
                s.left
            } else {
                s.right
            };
        }
        n
    }

    pub fn predict(&self, row: &[f64]) -> usize {
        self.nodes[self.leaf_of(row)].class()
    }

    pub fn leaves(&self) -> Vec<usize> {
        (0..self.nodes.len())
            .filter(|&i| self.nodes[i].is_leaf())
            .collect()
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_leaf()).count()
    }

    pub fn depth(&self) -> usize {
        let mut best = 0;
        let mut stack = vec![(0usize, 0usize)];
        while let Some((n, d)) = stack.pop() {
            best = best.max(d);
            if let Some(s) = &self.nodes[n].split {
                stack.push((s.left, d + 1));
                stack.push((s.right, d + 1));
            }
        }
        best
    }

    /// Copy of the tree with every node flagged in `collapsed` turned into a
    /// leaf, renumbered in preorder.
    pub fn collapse(&self, collapsed: &[bool]) -> DecisionTree {
        let mut nodes = Vec::new();
        // (old node, slot in parent to patch)
        let mut stack: Vec<(usize, Option<(usize, bool)>)> = vec![(0, None)];
        while let Some((old, parent)) = stack.pop() {
            let id = nodes.len();
            if let Some((p, is_left)) = parent {
                let s: &mut Split = nodes
                    .get_mut(p)
                    .and_then(|n: &mut TreeNode| n.split.as_mut())
                    .expect("parent is internal");
                if is_left {
                    s.left = id;
                } else {
                    s.right = id;
                }
            }
            let mut node = self.nodes[old].clone();
            if collapsed.get(old).copied().unwrap_or(false) {
                node.split = None;
            }
            if let Some(s) = &node.split {
                stack.push((s.right, Some((id, false))));
                stack.push((s.left, Some((id, true))));
            }
            nodes.push(node);
        }
        DecisionTree {
            nodes,
            n_classes: self.n_classes,
            n_features: self.n_features,
        }
    }

    /// Graphviz rendering; `feature` and `class` map indices to names.
    pub fn to_dot(
        &self,
        feature: impl Fn(usize) -> String,
        class: impl Fn(usize) -> String,
    ) -> String {
        let mut out = String::from("digraph tree {\n  node [shape=box, fontname=\"monospace\"];\n");
        for (i, n) in self.nodes.iter().enumerate() {
            let label = match &n.split {
                Some(s) => format!(
                    "{} <= {}\\nsamples = {}",
                    feature(s.feature),
                    s.threshold,
                    n.n_samples
                ),
                None => format!(
                    "leaf {i}\\n{}\\np = {:.3}\\nsamples = {}",
                    class(n.class()),
                    n.probability(),
                    n.n_samples
                ),
            };
            out.push_str(&format!(
                "  n{i} [label=\"{}\"];\n",
                label.replace('"', "\\\"")
            ));
            if let Some(s) = &n.split {
                out.push_str(&format!("  n{i} -> n{} [label=\"yes\"];\n", s.left));
                out.push_str(&format!("  n{i} -> n{} [label=\"no\"];\n", s.right));
            }
        }
        out.push_str("}\n");
        out
    }
}

/// Feature values mapped to per-column ranks of their distinct values.
pub struct BinnedMatrix {
    n_rows: usize,
    values: Vec<Vec<f64>>,
    bins: Vec<u32>,
}

impl BinnedMatrix {
    pub fn new(x: &Matrix) -> Self {
        let (n, d) = (x.rows(), x.cols());
        let mut values = Vec::with_capacity(d);
        let mut bins = vec![0u32; n * d];
        let mut col = Vec::with_capacity(n);
        for f in 0..d {
            col.clear();
            col.extend((0..n).map(|i| x.get(i, f)));
            let mut distinct = col.clone();
            distinct.sort_by(f64::total_cmp);
            distinct.dedup();
            let out = &mut bins[f * n..(f + 1) * n];
            if distinct.len() > 1 {
                for (b, v) in out.iter_mut().zip(&col) {
                    *b = distinct.partition_point(|d| d < v) as u32;
                }
            }
            values.push(distinct);
        }
        BinnedMatrix {
            n_rows: n,
            values,
            bins,
        }
    }

    fn bin(&self, f: usize, row: usize) -> u32 {
        self.bins[f * self.n_rows + row]
    }

    fn n_features(&self) -> usize {
        self.values.len()
    }
}

#[derive(Clone, Copy)]
struct Candidate {
    feature: usize,
    cut: u32,
    threshold: f64,
    gain: f64,
}

struct Pending {
    node: usize,
    rows: Vec<u32>,
    split: Candidate,
}

impl PartialEq for Pending {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Pending {}
impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Pending {
    // Largest gain first, then earliest node.
    fn cmp(&self, other: &Self) -> Ordering {
        self.split
            .gain
            .total_cmp(&other.split.gain)
            .then_with(|| other.node.cmp(&self.node))
    }
}

struct Grower<'a, R> {
    data: &'a BinnedMatrix,
    y: &'a [usize],
    n_classes: usize,
    class_weights: &'a [f64],
    params: &'a TreeParams,
    rng: &'a mut R,
    hist_w: Vec<f64>,
    hist_n: Vec<u32>,
}

impl<R: Rng> Grower<'_, R> {
    fn node_for(&self, rows: &[u32]) -> TreeNode {
        let mut w = vec![0.0; self.n_classes];
        for &r in rows {
            let c = self.y[r as usize];
            w[c] += self.class_weights[c];
        }
        TreeNode {
            impurity: gini(&w),
            class_weight: w,
            n_samples: rows.len(),
            split: None,
        }
    }

    fn candidate_features(&mut self) -> Vec<usize> {
        let d = self.data.n_features();
        let k = self.params.max_features.resolve(d);
        if k >= d {
            return (0..d).collect();
        }
        let mut f = sample(self.rng, d, k).into_vec();
        f.sort_unstable();
        f
    }

    fn best_split(&mut self, rows: &[u32], node: &TreeNode) -> Option<Candidate> {
        let min_leaf = self.params.min_leaf.max(1);
        if node.impurity <= 0.0 || rows.len() < 2 * min_leaf {
            return None;
        }
        let k = self.n_classes;
        let total = node.weight();
        let parent: f64 = node.class_weight.iter().map(|w| w * w).sum::<f64>() / total;
        let min_gain = 1e-10 * total;
        let mut best: Option<Candidate> = None;
        let mut left = vec![0.0; k];
        for f in self.candidate_features() {
            let values = &self.data.values[f];
            if values.len() < 2 {
                continue;
            }
            let nb = values.len();
            self.hist_w.clear();
            self.hist_w.resize(nb * k, 0.0);
            self.hist_n.clear();
            self.hist_n.resize(nb, 0);
            for &r in rows {
                let b = self.data.bin(f, r as usize) as usize;
                let c = self.y[r as usize];
                self.hist_w[b * k + c] += self.class_weights[c];
                self.hist_n[b] += 1;
            }
            left.iter_mut().for_each(|v| *v = 0.0);
            let mut left_n = 0usize;
            let mut prev: Option<usize> = None;
            for b in 0..nb {
                if self.hist_n[b] == 0 {
                    continue;
                }
                if let Some(p) = prev {
                    let right_n = rows.len() - left_n;
                    if left_n >= min_leaf && right_n >= min_leaf {
                        let lw: f64 = left.iter().sum();
                        let rw = total - lw;
                        if lw > 0.0 && rw > 0.0 {
                            let mut ls = 0.0;
                            let mut rs = 0.0;
                            for (c, &l) in left.iter().enumerate() {
                                let r = node.class_weight[c] - l;
                                ls += l * l;
                                rs += r * r;
                            }
                            let gain = ls / lw + rs / rw - parent;
                            if gain > min_gain && best.is_none_or(|b| gain > b.gain) {
                                let (a, z) = (values[p], values[b]);
                                let mut threshold = a + (z - a) / 2.0;
                                if threshold >= z {
                                    threshold = a;
                                }
                                best = Some(Candidate {
                                    feature: f,
                                    cut: p as u32,
                                    threshold,
                                    gain,
                                });
                            }
                        }
                    }
                }
                for (c, l) in left.iter_mut().enumerate() {
                    *l += self.hist_w[b * k + c];
                }
                left_n += self.hist_n[b] as usize;
                prev = Some(b);
            }
        }
        best
    }
}

/// Fits a tree on `rows` of a pre-binned matrix. Duplicated row indices act
/// as repeated samples.
pub fn fit_tree_binned<R: Rng>(
    data: &BinnedMatrix,
    y: &[usize],
    n_classes: usize,
    rows: &[usize],
    class_weights: &[f64],
    params: &TreeParams,
    rng: &mut R,
) -> DecisionTree {
    let mut g = Grower {
        data,
        y,
        n_classes,
        class_weights,
        params,
        rng,
        hist_w: Vec::new(),
        hist_n: Vec::new(),
    };
    let root_rows: Vec<u32> = rows.iter().map(|&r| r as u32).collect();
    let mut nodes = vec![g.node_for(&root_rows)];
    let mut heap = BinaryHeap::new();
    if let Some(split) = g.best_split(&root_rows, &nodes[0]) {
        heap.push(Pending {
            node: 0,
            rows: root_rows,
            split,
        });
    }
    let max_leaves = params.max_leaves.unwrap_or(usize::MAX).max(1);
    let mut leaves = 1;
    while leaves < max_leaves {
        let Some(p) = heap.pop() else { break };
        let (l_rows, r_rows): (Vec<u32>, Vec<u32>) = p
            .rows
            .into_iter()
            .partition(|&r| data.bin(p.split.feature, r as usize) <= p.split.cut);
        let (li, ri) = (nodes.len(), nodes.len() + 1);
        nodes.push(g.node_for(&l_rows));
        nodes.push(g.node_for(&r_rows));
        nodes[p.node].split = Some(Split {
            feature: p.split.feature,
            threshold: p.split.threshold,
            left: li,
            right: ri,
        });
        leaves += 1;
        for (id, rows) in [(li, l_rows), (ri, r_rows)] {
            if let Some(split) = g.best_split(&rows, &nodes[id]) {
                heap.push(Pending {
                    node: id,
                    rows,
                    split,
                });
            }
        }
    }
    let grown = DecisionTree {
        nodes,
        n_classes,
        n_features: data.n_features(),
    };
    grown.collapse(&[])
}

pub fn fit_tree(
    x: &Matrix,
    y: &[usize],
    n_classes: usize,
    rows: &[usize],
    class_weights: &[f64],
    params: &TreeParams,
) -> DecisionTree {
    let data = BinnedMatrix::new(x);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    fit_tree_binned(&data, y, n_classes, rows, class_weights, params, &mut rng)
}

/// Leaf id reached by every row, keyed by leaf.
pub fn route_rows(tree: &DecisionTree, x: &Matrix, rows: &[usize]) -> HashMap<usize, Vec<usize>> {
    let mut out: HashMap<usize, Vec<usize>> = HashMap::new();
    for &r in rows {
        out.entry(tree.leaf_of(x.row(r))).or_default().push(r);
    }
    out
}
