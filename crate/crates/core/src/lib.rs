//! Graph anonymisation laboratory.
//!
//! Implements the K-Match anonymiser, checkers for the usual structural
//! privacy properties, an active (sybil) re-identification attack with its
//! success-rate scoring, an exact enumerative adversary oracle, utility
//! metrics and an experiment harness that ties them together.

pub mod attack;
pub mod automorphism;
pub mod fixtures;
pub mod generators;
pub mod harness;
pub mod graph;
pub mod kmatch;
pub mod metrics;
pub mod oracle;
pub mod privacy;
pub mod rng;

pub use graph::{Graph, VertexId, VertexSet};
