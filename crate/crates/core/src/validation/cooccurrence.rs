use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::graph::{BipartiteGraph, Layer, UndirectedGraph};

/// Sparse symmetric co-occurrence counts `V^ij = Σ_α b_iα b_jα` for
/// `i < j`; pairs with no common neighbor are absent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CooccurrenceTable {
    pub layer: Layer,
    counts: BTreeMap<(usize, usize), usize>,
}

impl CooccurrenceTable {
    pub fn get(&self, i: usize, j: usize) -> usize {
        let key = if i < j { (i, j) } else { (j, i) };
        self.counts.get(&key).copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), usize)> + '_ {
        self.counts.iter().map(|(&k, &v)| (k, v))
    }

    /// The unvalidated projection weighted by co-occurrence counts.
    pub fn to_weighted_graph(&self, graph: &BipartiteGraph) -> UndirectedGraph {
        let ids = graph.ids(self.layer).map(str::to_owned).collect();
        let edges: Vec<_> = self.iter().map(|((i, j), v)| (i, j, v as f64)).collect();
        UndirectedGraph::from_edges(ids, &edges).expect("co-occurrence pairs are valid edges")
    }
}

/// Counts shared opposite-layer neighbors for every pair of `layer`.
pub fn cooccurrences(graph: &BipartiteGraph, layer: Layer) -> CooccurrenceTable {
    let mut counts = BTreeMap::new();
    let opposite = layer.opposite();
    for alpha in 0..graph.layer_len(opposite) {
        let nbrs = graph.neighbors(opposite, alpha);
        for (a, &i) in nbrs.iter().enumerate() {
            for &j in &nbrs[a + 1..] {
                *counts.entry((i, j)).or_insert(0) += 1;
            }
        }
    }
    CooccurrenceTable { layer, counts }
}
