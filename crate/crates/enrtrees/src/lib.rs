//! Unlabelled enriched trees: cycle index sums, exact and limit samplers,
//! block-graph and k-tree decoders, metric summaries and statistics.

pub mod metrics;
pub mod models;
pub mod oracle;
pub mod par;
pub mod powerseries;
pub mod samplers;
pub mod species;
pub mod stats;
pub mod symmetry;
pub mod verify;
