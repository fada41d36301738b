use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::cv::{stratified_kfold, Fold};
use super::dataset::{class_weights, Dataset, Matrix};
use super::forest::{fit_forest, ForestModel, ForestParams};
use super::logistic::{fit_logistic, LogisticModel, LogisticParams};
use super::metrics::{col_normalize, confusion_matrix, macro_scores, row_normalize, MacroScores};
use super::tree::{fit_tree, DecisionTree, TreeParams};
use crate::error::{Error, Result};
use crate::ingest::MethodGroup;
use crate::motif::{FeatureMode, Vocabulary};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Lr,
    #[default]
    Dt,
    Rf,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Lr, ModelKind::Dt, ModelKind::Rf];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Lr => "lr",
            ModelKind::Dt => "dt",
            ModelKind::Rf => "rf",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lr" | "logistic" => Ok(ModelKind::Lr),
            "dt" | "tree" => Ok(ModelKind::Dt),
            "rf" | "forest" => Ok(ModelKind::Rf),
            other => Err(Error::Config(format!("unknown model '{other}'"))),
        }
    }
}

/// Everything needed to refit a model.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub seed: u64,
    pub logistic: LogisticParams,
    pub tree: TreeParams,
    pub forest: ForestParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Classifier {
    Logistic(LogisticModel),
    Tree(DecisionTree),
    Forest(ForestModel),
}

impl Classifier {
    pub fn predict(&self, row: &[f64]) -> usize {
        match self {
            Classifier::Logistic(m) => m.predict(row),
            Classifier::Tree(t) => t.predict(row),
            Classifier::Forest(f) => f.predict(row),
        }
    }

    pub fn predict_rows(&self, x: &Matrix, rows: &[usize]) -> Vec<usize> {
        rows.iter().map(|&r| self.predict(x.row(r))).collect()
    }
}

/// Fits `spec` on `rows` with balanced class weights computed over them.
pub fn fit_model(
    spec: &ModelSpec,
    x: &Matrix,
    y: &[usize],
    n_classes: usize,
    rows: &[usize],
) -> Result<Classifier> {
    let w = class_weights(y, rows, n_classes)?;
    fit_weighted(spec, x, y, n_classes, rows, &w)
}

pub fn fit_weighted(
    spec: &ModelSpec,
    x: &Matrix,
    y: &[usize],
    n_classes: usize,
    rows: &[usize],
    class_weights: &[f64],
) -> Result<Classifier> {
    if rows.is_empty() {
        return Err(Error::Model("no training rows".into()));
    }
    Ok(match spec.kind {
        ModelKind::Lr => Classifier::Logistic(fit_logistic(
            x,
            y,
            n_classes,
            rows,
            class_weights,
            &spec.logistic,
        )),
        ModelKind::Dt => {
            Classifier::Tree(fit_tree(x, y, n_classes, rows, class_weights, &spec.tree))
        }
        ModelKind::Rf => Classifier::Forest(fit_forest(
            x,
            y,
            n_classes,
            rows,
            class_weights,
            &spec.forest,
            spec.seed,
        )),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub train_size: usize,
    pub test_size: usize,
    pub scores: MacroScores,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model: ModelKind,
    pub mode: FeatureMode,
    pub k: usize,
    pub seed: u64,
    pub classes: Vec<MethodGroup>,
    pub folds: Vec<FoldReport>,
    /// Means over folds.
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Pooled over the test folds; rows are true classes.
    pub confusion: Vec<Vec<u64>>,
    pub confusion_recall: Vec<Vec<f64>>,
    pub confusion_precision: Vec<Vec<f64>>,
}

impl EvalReport {
    pub fn to_json(&self) -> Result<Vec<u8>> {
        Ok(serde_json::to_vec_pretty(self)?)
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        Ok(serde_json::from_slice(bytes)?)
    }

    /// Confusion matrix as CSV with class names on both axes.
    pub fn confusion_csv(&self) -> String {
        let names: Vec<&str> = self.classes.iter().map(|c| c.as_str()).collect();
        let mut out = format!("true\\predicted,{}\n", names.join(","));
        for (name, row) in names.iter().zip(&self.confusion) {
            let cells: Vec<String> = row.iter().map(u64::to_string).collect();
            out.push_str(&format!("{name},{}\n", cells.join(",")));
        }
        out
    }
}

/// Stratified k-fold cross-validation of `spec` on `ds`.
pub fn cross_validate(ds: &Dataset, spec: &ModelSpec, k: usize) -> Result<EvalReport> {
    let folds = stratified_kfold(&ds.y, ds.n_classes(), k, spec.seed)?;
    evaluate_folds(ds, spec, &folds, k)
}

pub fn evaluate_folds(
    ds: &Dataset,
    spec: &ModelSpec,
    folds: &[Fold],
    k: usize,
) -> Result<EvalReport> {
    let n = ds.n_classes();
    let mut reports = Vec::with_capacity(folds.len());
    let mut pooled = vec![vec![0u64; n]; n];
    for (i, fold) in folds.iter().enumerate() {
        let model = fit_model(spec, &ds.x, &ds.y, n, &fold.train)?;
        let pred = model.predict_rows(&ds.x, &fold.test);
        let truth: Vec<usize> = fold.test.iter().map(|&r| ds.y[r]).collect();
        for (r, row) in confusion_matrix(&truth, &pred, n).into_iter().enumerate() {
            for (c, v) in row.into_iter().enumerate() {
                pooled[r][c] += v;
            }
        }
        reports.push(FoldReport {
            fold: i,
            train_size: fold.train.len(),
            test_size: fold.test.len(),
            scores: macro_scores(&truth, &pred, n),
        });
    }
    let mean = |f: fn(&MacroScores) -> f64| {
        reports.iter().map(|r| f(&r.scores)).sum::<f64>() / reports.len().max(1) as f64
    };
    Ok(EvalReport {
        model: spec.kind,
        mode: ds.features.first().map_or(FeatureMode::ME, |v| v.mode),
        k,
        seed: spec.seed,
        classes: ds.classes.clone(),
        precision: mean(|s| s.precision),
        recall: mean(|s| s.recall),
        f1: mean(|s| s.f1),
        confusion_recall: row_normalize(&pooled),
        confusion_precision: col_normalize(&pooled),
        confusion: pooled,
        folds: reports,
    })
}

pub const MODEL_FORMAT: &str = "motifscope-model";

/// A fitted model with everything needed to featurize new data for it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub mode: FeatureMode,
    pub spec: ModelSpec,
    pub classes: Vec<MethodGroup>,
    pub vocabulary: Vocabulary,
    pub model: Classifier,
    /// Cost-complexity alpha when the tree was pruned.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pruned_alpha: Option<f64>,
}

impl ModelFile {
    pub fn new(ds: &Dataset, mode: FeatureMode, spec: ModelSpec, model: Classifier) -> Self {
        ModelFile {
            format: MODEL_FORMAT.into(),
            version: 1,
            mode,
            spec,
            classes: ds.classes.clone(),
            vocabulary: ds.vocabulary.clone(),
            model,
            pruned_alpha: None,
        }
    }

    pub fn to_json(&self) -> Result<Vec<u8>> {
        Ok(serde_json::to_vec(self)?)
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let m: ModelFile = serde_json::from_slice(bytes)?;
        if m.format != MODEL_FORMAT || m.version != 1 {
            return Err(Error::invalid(
                "model",
                format!("unsupported format {} v{}", m.format, m.version),
            ));
        }
        let width = m.vocabulary.n_columns();
        let ok = !m.classes.is_empty()
            && match &m.model {
                Classifier::Logistic(l) => {
                    l.weights.len() == m.classes.len()
                        && l.biases.len() == m.classes.len()
                        && l.weights.iter().all(|w| w.len() == width)
                        && l.scale.as_ref().is_none_or(|s| s.len() == width)
                }
                Classifier::Tree(t) => tree_ok(t, width, m.classes.len()),
                Classifier::Forest(f) => {
                    !f.trees.is_empty()
                        && f.n_classes == m.classes.len()
                        && f.trees.iter().all(|t| tree_ok(t, width, m.classes.len()))
                }
            };
        if !ok {
            return Err(Error::invalid(
                "model",
                "model shape does not match vocabulary or classes",
            ));
        }
        Ok(m)
    }
}

fn tree_ok(t: &DecisionTree, width: usize, n_classes: usize) -> bool {
    !t.nodes.is_empty()
        && t.n_classes == n_classes
        && t.n_features == width
        && t.nodes.iter().enumerate().all(|(i, n)| {
            n.class_weight.len() == n_classes
                && n.split.is_none_or(|s| {
                    s.feature < width
                        && s.left > i
                        && s.right > i
                        && s.left < t.nodes.len()
                        && s.right < t.nodes.len()
                })
        })
}
