//! Supervised classification of feature vectors into method groups.

mod cv;
mod dataset;
mod forest;
mod logistic;
mod metrics;
mod model;
mod tree;

pub use cv::{stratified_kfold, Fold};
pub use dataset::{class_weights, Dataset, DatasetOptions, Matrix};
pub use forest::{bootstrap_rows, fit_forest, tree_rng, ForestModel, ForestParams};
pub use logistic::{
    binary_objective, fit_logistic, lbfgs, FeatureScaling, LbfgsResult, LogisticModel,
    LogisticParams,
};
pub use metrics::{
    col_normalize, confusion_matrix, macro_scores, row_normalize, ClassScores, MacroScores,
};
pub use model::{
    cross_validate, evaluate_folds, fit_model, fit_weighted, Classifier, EvalReport, FoldReport,
    ModelFile, ModelKind, ModelSpec, MODEL_FORMAT,
};
pub use tree::{
    fit_tree, fit_tree_binned, route_rows, BinnedMatrix, DecisionTree, MaxFeatures, Split,
    TreeNode, TreeParams,
};
