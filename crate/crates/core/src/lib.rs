//! Ego transfer network motifs for DeFi transaction analysis.
//!
//! The pipeline turns token-transfer records into per-transaction ego
//! networks, describes each network by typed motif and edge counts, learns
//! method groups from those features, extracts per-leaf signature itemsets
//! from a pruned decision tree and profiles accounts by the signatures their
//! transactions match.

pub mod error;
pub mod etn;
pub mod ingest;
pub mod learn;
pub mod motif;
pub mod pipeline;
pub mod profile;
pub mod signatures;
pub mod store;
pub mod synth;

pub use error::{Error, Result};

/// Caps the global worker pool; call before any parallel work.
pub fn set_threads(n: usize) -> Result<()> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}
