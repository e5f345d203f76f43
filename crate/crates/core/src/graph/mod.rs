//! Graph types shared by every pipeline stage.
//!
//! Node identifiers are opaque strings at the API boundary and dense
//! indices internally. Index assignment follows first-appearance order, so
//! the same input order always yields the same graph.

mod bipartite;
mod directed;
mod partition;
mod undirected;

pub use bipartite::{BipartiteGraph, Layer};
pub use directed::{
    undirected_clustering, weakly_connected_components, ClusteringReport, DirectedWeightedGraph,
    GraphBuilder,
};
pub use partition::Partition;
pub use undirected::UndirectedGraph;
