//! Entropy-based detection of echo chambers in social interaction data.
//!
//! The crate is organized as a pipeline:
//!
//! * [`graph`]: bipartite and directed graph types plus the handful of
//!   traversal and clustering routines the pipeline needs.
//! * [`bicm`]: the Bipartite Configuration Model, a maximum-entropy null
//!   model constraining both degree sequences on average.
//! * [`validation`]: co-occurrence counting, exact Poisson-Binomial p-values
//!   and the FDR-filtered monopartite projection.
//! * [`community`]: shuffled Louvain and seeded label propagation.
//! * [`ingest`]: tweet records, URL canonicalization, domain trust labels
//!   and a synthetic data generator.
//! * [`pipeline`]: discursive communities, news-engagement communities,
//!   echo chambers and the metrics reported about them.

pub mod bicm;
pub mod community;
pub mod error;
pub mod graph;
pub mod ingest;
pub mod pipeline;
pub mod validation;

pub use error::{Error, Result};
