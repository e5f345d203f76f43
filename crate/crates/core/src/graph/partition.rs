use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Assignment of every node of a graph to exactly one community.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    node_ids: Vec<String>,
    communities: Vec<usize>,
    modularity: f64,
    shuffle_seed: u64,
}

impl Partition {
    pub fn new(
        node_ids: Vec<String>,
        communities: Vec<usize>,
        modularity: f64,
        shuffle_seed: u64,
    ) -> Self {
        assert_eq!(node_ids.len(), communities.len());
        Partition {
            node_ids,
            communities,
            modularity,
            shuffle_seed,
        }
    }

    pub fn modularity(&self) -> f64 {
        self.modularity
    }

    /// Seed of the node-order shuffle that produced this partition.
    pub fn shuffle_seed(&self) -> u64 {
        self.shuffle_seed
    }

    pub fn len(&self) -> usize {
        self.node_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.node_ids.is_empty()
    }

    /// Community of each node, indexed like the graph the partition was
    /// computed on.
    pub fn assignment(&self) -> &[usize] {
        &self.communities
    }

    pub fn node_ids(&self) -> &[String] {
        &self.node_ids
    }

    pub fn community_of(&self, id: &str) -> Option<usize> {
        self.node_ids
            .iter()
            .position(|n| n == id)
            .map(|i| self.communities[i])
    }

    pub fn community_count(&self) -> usize {
        self.communities.iter().max().map_or(0, |m| m + 1)
    }

    /// Members of each community, in node order.
    pub fn members(&self) -> BTreeMap<usize, Vec<String>> {
        let mut out: BTreeMap<usize, Vec<String>> = BTreeMap::new();
        for (id, &c) in self.node_ids.iter().zip(&self.communities) {
            out.entry(c).or_default().push(id.clone());
        }
        out
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, usize)> + '_ {
        self.node_ids
            .iter()
            .map(String::as_str)
            .zip(self.communities.iter().copied())
    }

    /// Writes a `node,community` CSV.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["node", "community"])?;
        for (id, c) in self.iter() {
            w.write_record([id, &c.to_string()])?;
        }
        w.flush().map_err(Error::from)
    }
}
