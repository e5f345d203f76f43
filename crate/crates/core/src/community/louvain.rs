use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::child_seed;
use super::modularity::modularity;
use crate::error::{Error, Result};
use crate::graph::{Partition, UndirectedGraph};

// Gains below this are treated as noise so that floating-point jitter cannot
// make a node oscillate between equivalent communities.
const MIN_GAIN: f64 = 1e-12;

/// Weighted graph at one level of the hierarchy. `self_weight[i]` is the
/// weight of edges swallowed inside super-node `i`.
struct Level {
    adj: Vec<Vec<(usize, f64)>>,
    self_weight: Vec<f64>,
    strength: Vec<f64>,
}

impl Level {
    fn from_graph(graph: &UndirectedGraph) -> Self {
        let n = graph.node_count();
        let adj: Vec<Vec<(usize, f64)>> = (0..n).map(|i| graph.neighbors(i).to_vec()).collect();
        let strength = (0..n).map(|i| graph.strength(i)).collect();
        Level {
            adj,
            self_weight: vec![0.0; n],
            strength,
        }
    }

    fn len(&self) -> usize {
        self.adj.len()
    }

    /// Local moving phase. Returns the community of every node, relabeled
    /// densely by first appearance, and whether any node moved.
    fn local_moves(&self, total: f64, rng: &mut ChaCha8Rng) -> (Vec<usize>, bool) {
        let n = self.len();
        let mut community: Vec<usize> = (0..n).collect();
        let mut tot = self.strength.clone();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);

        let two_w = 2.0 * total;
        let mut link_to = vec![0.0; n];
        let mut touched: Vec<usize> = Vec::new();
        let mut moved_any = false;
        loop {
            let mut moved = false;
            for &i in &order {
                let home = community[i];
                let k = self.strength[i];
                for &(j, w) in &self.adj[i] {
                    let c = community[j];
                    if link_to[c] == 0.0 {
                        touched.push(c);
                    }
                    link_to[c] += w;
                }
                tot[home] -= k;
                let gain = |c: usize, link: f64| link - tot[c] * k / two_w;
                let mut best = home;
                let mut best_gain = gain(home, link_to[home]);
                let stay_gain = best_gain;
                for &c in &touched {
                    let g = gain(c, link_to[c]);
                    if g > best_gain && g > stay_gain + MIN_GAIN {
                        best = c;
                        best_gain = g;
                    }
                }
                tot[best] += k;
                if best != home {
                    community[i] = best;
                    moved = true;
                }
                for &c in &touched {
                    link_to[c] = 0.0;
                }
                touched.clear();
            }
            if !moved {
                break;
            }
            moved_any = true;
        }
        (relabel_dense(&community), moved_any)
    }

    fn aggregate(&self, community: &[usize]) -> Level {
        let m = community.iter().max().map_or(0, |c| c + 1);
        let mut rows: Vec<std::collections::BTreeMap<usize, f64>> = vec![Default::default(); m];
        let mut self_weight = vec![0.0; m];
        let mut strength = vec![0.0; m];
        for i in 0..self.len() {
            let ci = community[i];
            self_weight[ci] += self.self_weight[i];
            strength[ci] += self.strength[i];
            for &(j, w) in &self.adj[i] {
                let cj = community[j];
                if ci == cj {
                    // each internal edge is visited from both ends
                    if i < j {
                        self_weight[ci] += w;
                    }
                } else {
                    *rows[ci].entry(cj).or_insert(0.0) += w;
                }
            }
        }
        let adj = rows.into_iter().map(|r| r.into_iter().collect()).collect();
        Level {
            adj,
            self_weight,
            strength,
        }
    }
}

fn relabel_dense(community: &[usize]) -> Vec<usize> {
    let mut map = vec![usize::MAX; community.len()];
    let mut next = 0;
    community
        .iter()
        .map(|&c| {
            if map[c] == usize::MAX {
                map[c] = next;
                next += 1;
            }
            map[c]
        })
        .collect()
}

/// Labels communities by decreasing size, ties by first appearance.
fn canonical_labels(community: &[usize]) -> Vec<usize> {
    let dense = relabel_dense(community);
    let m = dense.iter().max().map_or(0, |c| c + 1);
    let mut sizes = vec![0usize; m];
    for &c in &dense {
        sizes[c] += 1;
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| sizes[b].cmp(&sizes[a]).then(a.cmp(&b)));
    let mut rank = vec![0; m];
    for (r, &c) in order.iter().enumerate() {
        rank[c] = r;
    }
    dense.iter().map(|&c| rank[c]).collect()
}

/// One multi-level Louvain run with node orders drawn from `seed`.
pub fn louvain_once(graph: &UndirectedGraph, seed: u64) -> Result<Partition> {
    if graph.node_count() == 0 {
        return Err(Error::EmptyNetwork);
    }
    let total = graph.total_weight();
    let mut membership: Vec<usize> = (0..graph.node_count()).collect();
    if total > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut level = Level::from_graph(graph);
        loop {
            let (community, moved) = level.local_moves(total, &mut rng);
            if !moved {
                break;
            }
            for m in membership.iter_mut() {
                *m = community[*m];
            }
            level = level.aggregate(&community);
        }
    }
    let labels = canonical_labels(&membership);
    let q = modularity(graph, &labels)?;
    Ok(Partition::new(graph.ids().to_vec(), labels, q, seed))
}

/// Runs Louvain once per node-order shuffle and keeps the partition with the
/// highest modularity (earliest run on ties).
pub fn louvain_shuffled(graph: &UndirectedGraph, shuffles: usize, seed: u64) -> Result<Partition> {
    if shuffles == 0 {
        return Err(Error::InvalidArgument("shuffles must be at least 1".into()));
    }
    if graph.node_count() == 0 {
        return Err(Error::EmptyNetwork);
    }
    let runs: Vec<Partition> = (0..shuffles as u64)
        .into_par_iter()
        .map(|k| louvain_once(graph, child_seed(seed, k)))
        .collect::<Result<_>>()?;
    let mut best = 0;
    for (k, p) in runs.iter().enumerate().skip(1) {
        if p.modularity() > runs[best].modularity() {
            best = k;
        }
    }
    Ok(runs.into_iter().nth(best).expect("at least one run"))
}
