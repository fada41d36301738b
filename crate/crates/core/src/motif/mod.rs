//! Ego motif catalog, typed motif counts, edge features and feature modes.

mod catalog;
mod count;
mod features;
mod vocab;

pub use catalog::{enumerate_catalog, CatalogEntry, MotifCatalog, MotifShape, Role, ShapePattern};
pub use count::{count_motifs, count_untyped, shape_id, MatchSemantics, TypedMotifCount};
pub use features::{
    assemble_features, edge_features, motif_edge_features, read_features, write_features,
    EdgeFeature, FeatureMode, FeatureVector, FeaturizeOutput, Featurizer,
};
pub use vocab::{Vocabulary, OOV_KEY};
