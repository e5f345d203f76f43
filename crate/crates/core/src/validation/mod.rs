//! Statistically validated projections of bipartite networks.
//!
//! Two nodes of the projected layer are linked when their number of common
//! neighbors is significantly larger than the BiCM prediction. Under the
//! model the co-occurrence count is Poisson-Binomial with per-neighbor
//! success probability `p_iα p_jα`; the p-values of all pairs with at least
//! one co-occurrence are then filtered with the Benjamini–Hochberg rule.
//! Those pairs form the test family unless [`TestFamily::AllPairs`] widens it
//! to every pair of the layer.

mod cooccurrence;
mod fdr;
mod poibin;
mod projection;

pub use cooccurrence::{cooccurrences, CooccurrenceTable};
pub use fdr::{
    fdr_rejection_count, fdr_rejection_count_in_family, fdr_select, fdr_select_in_family,
};
pub use poibin::{pair_pvalue, PoissonBinomial};
pub use projection::{
    validated_projection, validated_projection_with, ProjectionMetadata, TestFamily, ValidatedEdge,
    ValidatedProjection, ValidationOptions,
};
