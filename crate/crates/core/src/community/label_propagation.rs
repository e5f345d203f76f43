use std::collections::BTreeMap;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::DirectedWeightedGraph;

/// Community labels over the nodes of a retweet graph, some of which are
/// fixed seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeededLabeling {
    node_ids: Vec<String>,
    labels: Vec<Option<usize>>,
    seed: Vec<bool>,
    iterations: usize,
    converged: bool,
}

impl SeededLabeling {
    /// Unlabeled nodes of `graph` with the given seed labels.
    pub fn new<I, S>(graph: &DirectedWeightedGraph, seeds: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, usize)>,
        S: AsRef<str>,
    {
        let n = graph.node_count();
        let mut labels = vec![None; n];
        let mut seed = vec![false; n];
        for (id, label) in seeds {
            let id = id.as_ref();
            let i = graph
                .index_of(id)
                .ok_or_else(|| Error::UnknownNode(id.to_string()))?;
            labels[i] = Some(label);
            seed[i] = true;
        }
        Ok(SeededLabeling {
            node_ids: graph.ids().map(str::to_string).collect(),
            labels,
            seed,
            iterations: 0,
            converged: false,
        })
    }

    pub fn node_ids(&self) -> &[String] {
        &self.node_ids
    }

    /// Label per node, indexed like the graph.
    pub fn labels(&self) -> &[Option<usize>] {
        &self.labels
    }

    pub fn label_of(&self, id: &str) -> Option<usize> {
        let i = self.node_ids.iter().position(|n| n == id)?;
        self.labels[i]
    }

    pub fn is_seed(&self, index: usize) -> bool {
        self.seed[index]
    }

    pub fn seed_count(&self) -> usize {
        self.seed.iter().filter(|s| **s).count()
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    pub fn unlabeled_count(&self) -> usize {
        self.labels.iter().filter(|l| l.is_none()).count()
    }

    /// Node ids grouped by label; unlabeled nodes are left out.
    pub fn members(&self) -> BTreeMap<usize, Vec<String>> {
        let mut out: BTreeMap<usize, Vec<String>> = BTreeMap::new();
        for (id, l) in self.node_ids.iter().zip(&self.labels) {
            if let Some(l) = l {
                out.entry(*l).or_default().push(id.clone());
            }
        }
        out
    }

    /// CSV with header `node,community,seed`; unlabeled nodes get
    /// `unlabeled`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["node", "community", "seed"])?;
        for i in 0..self.node_ids.len() {
            let label = self.labels[i].map_or_else(|| "unlabeled".to_string(), |l| l.to_string());
            w.write_record([
                self.node_ids[i].as_str(),
                &label,
                if self.seed[i] { "true" } else { "false" },
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelPropagationOptions {
    pub max_sweeps: usize,
    /// Count retweet multiplicities instead of one vote per neighbor.
    pub weighted: bool,
}

impl Default for LabelPropagationOptions {
    fn default() -> Self {
        LabelPropagationOptions {
            max_sweeps: 100,
            weighted: true,
        }
    }
}

/// Spreads seed labels over the undirected view of `graph`.
///
/// A node with seed neighbors takes the majority label among those seeds;
/// otherwise it takes the majority among its labeled non-seed neighbors.
/// A tie keeps the current label when it is among the winners and is
/// otherwise broken at random.
pub fn propagate_labels(
    graph: &DirectedWeightedGraph,
    start: &SeededLabeling,
    options: LabelPropagationOptions,
    seed: u64,
) -> Result<SeededLabeling> {
    if start.node_ids.len() != graph.node_count()
        || start.node_ids.iter().zip(graph.ids()).any(|(a, b)| a != b)
    {
        return Err(Error::InvalidArgument(
            "labeling does not match the graph".into(),
        ));
    }
    if start.seed_count() == 0 {
        return Err(Error::NoSeeds);
    }
    let n = graph.node_count();
    let neighbors: Vec<Vec<(usize, u64)>> = (0..n)
        .map(|i| graph.undirected_neighbors(i).into_iter().collect())
        .collect();

    let mut out = start.clone();
    out.iterations = 0;
    out.converged = false;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).filter(|&i| !out.seed[i]).collect();
    // (label, votes) in order of first neighbor carrying the label, so that
    // random tie-breaks do not depend on label values.
    let mut tally: Vec<(usize, u64)> = Vec::new();

    while out.iterations < options.max_sweeps {
        order.shuffle(&mut rng);
        let mut changed = 0usize;
        for &v in &order {
            let has_seed = neighbors[v].iter().any(|&(u, _)| out.seed[u]);
            tally.clear();
            for &(u, w) in &neighbors[v] {
                if out.seed[u] != has_seed {
                    continue;
                }
                let Some(label) = out.labels[u] else { continue };
                let vote = if options.weighted { w } else { 1 };
                match tally.iter_mut().find(|(l, _)| *l == label) {
                    Some(entry) => entry.1 += vote,
                    None => tally.push((label, vote)),
                }
            }
            let Some(top) = tally.iter().map(|&(_, c)| c).max() else {
                continue;
            };
            let current = out.labels[v];
            let winners: Vec<usize> = tally
                .iter()
                .filter(|&&(_, c)| c == top)
                .map(|&(l, _)| l)
                .collect();
            if current.is_some_and(|c| winners.contains(&c)) {
                continue;
            }
            let pick = if winners.len() == 1 {
                winners[0]
            } else {
                winners[rng.gen_range(0..winners.len())]
            };
            out.labels[v] = Some(pick);
            changed += 1;
        }
        out.iterations += 1;
        if changed == 0 {
            out.converged = true;
            break;
        }
    }
    Ok(out)
}
