use std::fmt;

use indexmap::IndexSet;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One of the two layers of a bipartite network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Layer {
    Top,
    Bottom,
}

impl Layer {
    pub fn opposite(self) -> Layer {
        match self {
            Layer::Top => Layer::Bottom,
            Layer::Bottom => Layer::Top,
        }
    }
}

impl fmt::Display for Layer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Layer::Top => f.write_str("top"),
            Layer::Bottom => f.write_str("bottom"),
        }
    }
}

/// Binary bipartite network described by its biadjacency structure.
///
/// Both adjacency lists are kept sorted, so `k_i` and `h_α` are simply
/// their lengths.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BipartiteGraph {
    top_ids: IndexSet<String>,
    bottom_ids: IndexSet<String>,
    top_adj: Vec<Vec<usize>>,
    bottom_adj: Vec<Vec<usize>>,
    edge_count: usize,
}

impl BipartiteGraph {
    /// Builds a graph from `(top, bottom)` identifier pairs.
    ///
    /// Indices are assigned by first appearance in each layer; repeated
    /// pairs collapse to a single link.
    pub fn build<I, T, B>(edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (T, B)>,
        T: AsRef<str>,
        B: AsRef<str>,
    {
        let mut top_ids = IndexSet::new();
        let mut bottom_ids = IndexSet::new();
        let mut pairs = Vec::new();
        for (t, b) in edges {
            let (ti, _) = top_ids.insert_full(t.as_ref().to_owned());
            let (bi, _) = bottom_ids.insert_full(b.as_ref().to_owned());
            pairs.push((ti, bi));
        }
        if pairs.is_empty() {
            return Err(Error::EmptyNetwork);
        }
        Ok(Self::assemble(top_ids, bottom_ids, pairs))
    }

    /// Builds a graph over `top_count × bottom_count` anonymous nodes named
    /// by their index. Nodes without links are kept.
    pub fn from_indices(
        top_count: usize,
        bottom_count: usize,
        edges: &[(usize, usize)],
    ) -> Result<Self> {
        for &(t, b) in edges {
            if t >= top_count {
                return Err(Error::IndexOutOfRange {
                    index: t,
                    len: top_count,
                });
            }
            if b >= bottom_count {
                return Err(Error::IndexOutOfRange {
                    index: b,
                    len: bottom_count,
                });
            }
        }
        let top_ids = (0..top_count).map(|i| i.to_string()).collect();
        let bottom_ids = (0..bottom_count).map(|i| i.to_string()).collect();
        Ok(Self::assemble(top_ids, bottom_ids, edges.to_vec()))
    }

    fn assemble(
        top_ids: IndexSet<String>,
        bottom_ids: IndexSet<String>,
        pairs: Vec<(usize, usize)>,
    ) -> Self {
        let mut top_adj = vec![Vec::new(); top_ids.len()];
        let mut bottom_adj = vec![Vec::new(); bottom_ids.len()];
        for (t, b) in pairs {
            top_adj[t].push(b);
        }
        let mut edge_count = 0;
        for (t, row) in top_adj.iter_mut().enumerate() {
            row.sort_unstable();
            row.dedup();
            edge_count += row.len();
            for &b in row.iter() {
                bottom_adj[b].push(t);
            }
        }
        BipartiteGraph {
            top_ids,
            bottom_ids,
            top_adj,
            bottom_adj,
            edge_count,
        }
    }

    pub fn top_count(&self) -> usize {
        self.top_adj.len()
    }

    pub fn bottom_count(&self) -> usize {
        self.bottom_adj.len()
    }

    pub fn layer_len(&self, layer: Layer) -> usize {
        match layer {
            Layer::Top => self.top_count(),
            Layer::Bottom => self.bottom_count(),
        }
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// Degree sequence `k_i` of the top layer.
    pub fn top_degrees(&self) -> Vec<usize> {
        self.top_adj.iter().map(Vec::len).collect()
    }

    /// Degree sequence `h_α` of the bottom layer.
    pub fn bottom_degrees(&self) -> Vec<usize> {
        self.bottom_adj.iter().map(Vec::len).collect()
    }

    pub fn degrees(&self, layer: Layer) -> Vec<usize> {
        match layer {
            Layer::Top => self.top_degrees(),
            Layer::Bottom => self.bottom_degrees(),
        }
    }

    /// Sorted neighbors of node `index` in `layer`.
    pub fn neighbors(&self, layer: Layer, index: usize) -> &[usize] {
        match layer {
            Layer::Top => &self.top_adj[index],
            Layer::Bottom => &self.bottom_adj[index],
        }
    }

    pub fn has_edge(&self, top: usize, bottom: usize) -> bool {
        self.top_adj
            .get(top)
            .is_some_and(|row| row.binary_search(&bottom).is_ok())
    }

    /// All links as `(top, bottom)` index pairs, row-major.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.top_adj
            .iter()
            .enumerate()
            .flat_map(|(t, row)| row.iter().map(move |&b| (t, b)))
    }

    pub fn id(&self, layer: Layer, index: usize) -> &str {
        match layer {
            Layer::Top => &self.top_ids[index],
            Layer::Bottom => &self.bottom_ids[index],
        }
    }

    pub fn index_of(&self, layer: Layer, id: &str) -> Option<usize> {
        match layer {
            Layer::Top => self.top_ids.get_index_of(id),
            Layer::Bottom => self.bottom_ids.get_index_of(id),
        }
    }

    pub fn ids(&self, layer: Layer) -> impl Iterator<Item = &str> + '_ {
        let set = match layer {
            Layer::Top => &self.top_ids,
            Layer::Bottom => &self.bottom_ids,
        };
        set.iter().map(String::as_str)
    }

    /// The same network with the layers swapped.
    pub fn transposed(&self) -> BipartiteGraph {
        BipartiteGraph {
            top_ids: self.bottom_ids.clone(),
            bottom_ids: self.top_ids.clone(),
            top_adj: self.bottom_adj.clone(),
            bottom_adj: self.top_adj.clone(),
            edge_count: self.edge_count,
        }
    }
}
