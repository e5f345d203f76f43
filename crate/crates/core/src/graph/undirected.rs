use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Undirected weighted graph without self-loops, the input of community
/// detection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UndirectedGraph {
    ids: Vec<String>,
    adj: Vec<Vec<(usize, f64)>>,
}

impl UndirectedGraph {
    /// Builds the graph over `ids`; parallel edges add their weights.
    pub fn from_edges(ids: Vec<String>, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let n = ids.len();
        let mut rows: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n];
        for &(a, b, w) in edges {
            for x in [a, b] {
                if x >= n {
                    return Err(Error::IndexOutOfRange { index: x, len: n });
                }
            }
            if a == b {
                return Err(Error::InvalidArgument(format!("self-loop on {:?}", ids[a])));
            }
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "edge weight must be positive, got {w}"
                )));
            }
            *rows[a].entry(b).or_insert(0.0) += w;
            *rows[b].entry(a).or_insert(0.0) += w;
        }
        let adj = rows.into_iter().map(|r| r.into_iter().collect()).collect();
        Ok(UndirectedGraph { ids, adj })
    }

    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.adj[i]
    }

    pub fn weight(&self, a: usize, b: usize) -> f64 {
        self.adj[a]
            .binary_search_by_key(&b, |&(n, _)| n)
            .map_or(0.0, |pos| self.adj[a][pos].1)
    }

    /// Weighted degree `s_i`.
    pub fn strength(&self, i: usize) -> f64 {
        self.adj[i].iter().map(|&(_, w)| w).sum()
    }

    /// `W`, the sum of edge weights with each edge counted once.
    pub fn total_weight(&self) -> f64 {
        self.edges().map(|(_, _, w)| w).sum()
    }

    /// Edges with `a < b`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.adj.iter().enumerate().flat_map(|(a, row)| {
            row.iter()
                .filter(move |&&(b, _)| a < b)
                .map(move |&(b, w)| (a, b, w))
        })
    }
}
