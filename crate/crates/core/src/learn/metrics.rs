use serde::{Deserialize, Serialize};

/// Per-class scores; undefined ratios count as 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacroScores {
    pub precision: f64,
    pub recall: f64,
    /// Mean of the per-class F1 values.
    pub f1: f64,
    pub accuracy: f64,
    pub per_class: Vec<ClassScores>,
}

pub fn confusion_matrix(y_true: &[usize], y_pred: &[usize], n_classes: usize) -> Vec<Vec<u64>> {
    let mut m = vec![vec![0u64; n_classes]; n_classes];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        m[t][p] += 1;
    }
    m
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// Macro-averaged precision, recall and F1 over `n_classes` classes.
pub fn macro_scores(y_true: &[usize], y_pred: &[usize], n_classes: usize) -> MacroScores {
    let m = confusion_matrix(y_true, y_pred, n_classes);
    let per_class: Vec<ClassScores> = (0..n_classes)
        .map(|c| {
            let tp = m[c][c];
            let actual: u64 = m[c].iter().sum();
            let predicted: u64 = m.iter().map(|r| r[c]).sum();
            let precision = ratio(tp, predicted);
            let recall = ratio(tp, actual);
            let f1 = if precision + recall > 0.0 {
                2.0 * precision * recall / (precision + recall)
            } else {
                0.0
            };
            ClassScores {
                precision,
                recall,
                f1,
                support: actual as usize,
            }
        })
        .collect();
    let k = n_classes.max(1) as f64;
    let correct: u64 = (0..n_classes).map(|c| m[c][c]).sum();
    MacroScores {
        precision: per_class.iter().map(|c| c.precision).sum::<f64>() / k,
        recall: per_class.iter().map(|c| c.recall).sum::<f64>() / k,
        f1: per_class.iter().map(|c| c.f1).sum::<f64>() / k,
        accuracy: ratio(correct, y_true.len() as u64),
        per_class,
    }
}

/// Rows divided by their sums (recall view); empty rows stay zero.
pub fn row_normalize(m: &[Vec<u64>]) -> Vec<Vec<f64>> {
    m.iter()
        .map(|r| {
            let s: u64 = r.iter().sum();
            r.iter().map(|&v| ratio(v, s)).collect()
        })
        .collect()
}

/// Columns divided by their sums (precision view); empty columns stay zero.
pub fn col_normalize(m: &[Vec<u64>]) -> Vec<Vec<f64>> {
    let k = m.first().map_or(0, Vec::len);
    let sums: Vec<u64> = (0..k).map(|c| m.iter().map(|r| r[c]).sum()).collect();
    m.iter()
        .map(|r| r.iter().zip(&sums).map(|(&v, &s)| ratio(v, s)).collect())
        .collect()
}
