use std::collections::{BTreeMap, HashSet};
use std::io::{BufRead, Write};

use indexmap::IndexSet;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Directed graph with positive integer edge weights (retweet counts).
///
/// Built once through [`GraphBuilder`] and immutable afterwards. Node order
/// is the order in which identifiers were first added.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DirectedWeightedGraph {
    ids: IndexSet<String>,
    out: Vec<BTreeMap<usize, u64>>,
    inc: Vec<BTreeMap<usize, u64>>,
}

/// Accumulates nodes and edges; repeated edges add up their weights.
#[derive(Debug, Default, Clone)]
pub struct GraphBuilder {
    ids: IndexSet<String>,
    out: Vec<BTreeMap<usize, u64>>,
    self_loops: bool,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Allows `a → a` edges. Only aggregated views use them.
    pub fn with_self_loops(mut self) -> Self {
        self.self_loops = true;
        self
    }

    pub fn add_node(&mut self, id: &str) -> usize {
        if let Some(i) = self.ids.get_index_of(id) {
            return i;
        }
        self.ids.insert(id.to_owned());
        self.out.push(BTreeMap::new());
        self.ids.len() - 1
    }

    /// Adds `weight` retweets from `source` to `target`. A zero weight only
    /// registers the nodes.
    pub fn add_edge(&mut self, source: &str, target: &str, weight: u64) -> Result<()> {
        if source == target && !self.self_loops {
            return Err(Error::InvalidArgument(format!("self-loop on {source:?}")));
        }
        let s = self.add_node(source);
        let t = self.add_node(target);
        if weight > 0 {
            *self.out[s].entry(t).or_insert(0) += weight;
        }
        Ok(())
    }

    pub fn build(self) -> DirectedWeightedGraph {
        let mut inc = vec![BTreeMap::new(); self.ids.len()];
        for (s, row) in self.out.iter().enumerate() {
            for (&t, &w) in row {
                inc[t].insert(s, w);
            }
        }
        DirectedWeightedGraph {
            ids: self.ids,
            out: self.out,
            inc,
        }
    }
}

impl DirectedWeightedGraph {
    pub fn empty() -> Self {
        GraphBuilder::new().build()
    }

    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.out.iter().map(BTreeMap::len).sum()
    }

    pub fn total_weight(&self) -> u64 {
        self.out.iter().flat_map(|row| row.values()).sum()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> + '_ {
        self.ids.iter().map(String::as_str)
    }

    pub fn id(&self, index: usize) -> &str {
        &self.ids[index]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.ids.get_index_of(id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.ids.contains(id)
    }

    /// Edges as `(source, target, weight)` index triples, sorted.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, u64)> + '_ {
        self.out
            .iter()
            .enumerate()
            .flat_map(|(s, row)| row.iter().map(move |(&t, &w)| (s, t, w)))
    }

    pub fn weight(&self, source: &str, target: &str) -> u64 {
        match (self.index_of(source), self.index_of(target)) {
            (Some(s), Some(t)) => self.out[s].get(&t).copied().unwrap_or(0),
            _ => 0,
        }
    }

    pub fn out_edges(&self, index: usize) -> &BTreeMap<usize, u64> {
        &self.out[index]
    }

    pub fn in_edges(&self, index: usize) -> &BTreeMap<usize, u64> {
        &self.inc[index]
    }

    /// Neighbors of `index` ignoring direction, with the weights of both
    /// directions summed. Self-loops are skipped.
    pub fn undirected_neighbors(&self, index: usize) -> BTreeMap<usize, u64> {
        let mut nbrs = self.out[index].clone();
        for (&s, &w) in &self.inc[index] {
            *nbrs.entry(s).or_insert(0) += w;
        }
        nbrs.remove(&index);
        nbrs
    }

    /// The subgraph on `nodes ∩ V` keeping every edge with both endpoints
    /// inside. Node order follows the original graph.
    pub fn induced_subgraph<I, S>(&self, nodes: I) -> DirectedWeightedGraph
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let keep: HashSet<usize> = nodes
            .into_iter()
            .filter_map(|id| self.index_of(id.as_ref()))
            .collect();
        let mut builder = GraphBuilder::new().with_self_loops();
        for (i, id) in self.ids.iter().enumerate() {
            if keep.contains(&i) {
                builder.add_node(id);
            }
        }
        for (s, t, w) in self.edges() {
            if keep.contains(&s) && keep.contains(&t) {
                builder
                    .add_edge(&self.ids[s], &self.ids[t], w)
                    .expect("self-loops allowed");
            }
        }
        builder.build()
    }

    /// Reads `source<TAB>target[<TAB>weight]` lines. Blank lines and lines
    /// starting with `#` are skipped; a missing weight means 1.
    pub fn read_edge_list<R: BufRead>(reader: R) -> Result<Self> {
        let mut builder = GraphBuilder::new().with_self_loops();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let trimmed = line.trim_end_matches(['\r', '\n']);
            if trimmed.trim().is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = trimmed.split('\t').collect();
            let parse_err = |message: String| Error::Parse {
                line: lineno + 1,
                message,
            };
            let weight = match fields.len() {
                2 => 1,
                3 => fields[2]
                    .trim()
                    .parse::<u64>()
                    .map_err(|e| parse_err(format!("bad weight {:?}: {e}", fields[2])))?,
                n => return Err(parse_err(format!("expected 2 or 3 fields, found {n}"))),
            };
            builder.add_edge(fields[0], fields[1], weight)?;
        }
        Ok(builder.build())
    }

    pub fn write_edge_list<W: Write>(&self, mut writer: W) -> Result<()> {
        for (s, t, w) in self.edges() {
            writeln!(writer, "{}\t{}\t{}", self.ids[s], self.ids[t], w)?;
        }
        Ok(())
    }
}

/// Weakly connected components, largest first; ties are ordered by the
/// smallest member identifier. Members are sorted.
pub fn weakly_connected_components(graph: &DirectedWeightedGraph) -> Vec<Vec<String>> {
    let n = graph.node_count();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for (s, t, _) in graph.edges() {
        let (a, b) = (find(&mut parent, s), find(&mut parent, t));
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut groups: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    for i in 0..n {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().push(graph.id(i).to_owned());
    }
    let mut components: Vec<Vec<String>> = groups
        .into_values()
        .map(|mut members| {
            members.sort();
            members
        })
        .collect();
    components.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a[0].cmp(&b[0])));
    components
}

/// Per-node undirected clustering coefficients and their plain mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringReport {
    pub coefficients: BTreeMap<String, f64>,
    pub mean: f64,
}

/// Undirected, unweighted clustering coefficient of each node in `nodes`,
/// computed on the whole of `graph`. Nodes with fewer than two neighbors
/// score 0; the mean over an empty node set is 0.
pub fn undirected_clustering<I, S>(
    graph: &DirectedWeightedGraph,
    nodes: I,
) -> Result<ClusteringReport>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut coefficients = BTreeMap::new();
    let mut sum = 0.0;
    let mut count = 0usize;
    let mut neighbor_cache: Vec<Option<Vec<usize>>> = vec![None; graph.node_count()];
    let mut neighbors_of = |i: usize| -> Vec<usize> {
        neighbor_cache[i]
            .get_or_insert_with(|| graph.undirected_neighbors(i).into_keys().collect())
            .clone()
    };
    for id in nodes {
        let id = id.as_ref();
        let v = graph
            .index_of(id)
            .ok_or_else(|| Error::UnknownNode(id.to_owned()))?;
        let nbrs = neighbors_of(v);
        let d = nbrs.len();
        let c = if d < 2 {
            0.0
        } else {
            let mut links = 0usize;
            for (a, &u) in nbrs.iter().enumerate() {
                let nu = neighbors_of(u);
                links += nbrs[a + 1..]
                    .iter()
                    .filter(|w| nu.binary_search(w).is_ok())
                    .count();
            }
            2.0 * links as f64 / (d * (d - 1)) as f64
        };
        if coefficients.insert(id.to_owned(), c).is_none() {
            sum += c;
            count += 1;
        }
    }
    let mean = if count == 0 { 0.0 } else { sum / count as f64 };
    Ok(ClusteringReport { coefficients, mean })
}
