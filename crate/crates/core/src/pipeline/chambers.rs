use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::dico::DicoAssignment;
use super::nec::{NecAssignment, NecLayer};
use crate::error::{Error, Result};
use crate::graph::{
    undirected_clustering, weakly_connected_components, DirectedWeightedGraph, GraphBuilder,
};
use crate::ingest::Dataset;

/// Flow-network node standing for every user outside the chambers.
pub const OUTSIDE_GROUP: &str = "-1";

/// Users of one NEC sharing one DiCo and weakly connected by retweets among
/// themselves.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chamber {
    /// The NEC id, suffixed `.j` when the NEC holds several chambers.
    pub id: String,
    pub nec: usize,
    pub dico: usize,
    pub members: Vec<String>,
    pub internal_edges: usize,
    pub internal_retweets: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EchoChamberSet {
    pub chambers: Vec<Chamber>,
    /// NEC members that belong to no chamber.
    pub excluded_members: Vec<String>,
}

impl EchoChamberSet {
    pub fn is_empty(&self) -> bool {
        self.chambers.is_empty()
    }

    pub fn member_count(&self) -> usize {
        self.chambers.iter().map(|c| c.members.len()).sum()
    }

    /// User → chamber id.
    pub fn membership(&self) -> HashMap<&str, &str> {
        self.chambers
            .iter()
            .flat_map(|c| c.members.iter().map(move |m| (m.as_str(), c.id.as_str())))
            .collect()
    }
}

/// Splits every user NEC by DiCo and keeps the weakly connected retweet
/// components of size ≥ 2 within each part.
pub fn detect_echo_chambers(
    dataset: &Dataset,
    dicos: &DicoAssignment,
    necs: &NecAssignment,
) -> Result<EchoChamberSet> {
    if necs.layer() != NecLayer::Users {
        return Err(Error::InvalidArgument(
            "echo chambers need user NECs".into(),
        ));
    }
    let graph = dataset.retweet_graph();
    let mut out = EchoChamberSet::default();
    for (nec, members) in necs.groups() {
        let mut by_dico: BTreeMap<usize, Vec<&str>> = BTreeMap::new();
        for m in &members {
            let Some(i) = dataset.user_index(m) else {
                return Err(Error::UnknownMember {
                    kind: "user",
                    id: m.clone(),
                });
            };
            match dicos.labels()[i] {
                Some(d) => by_dico.entry(d).or_default().push(m),
                None => out.excluded_members.push(m.clone()),
            }
        }
        let mut found = Vec::new();
        for (dico, users) in by_dico {
            let sub = graph.induced_subgraph(&users);
            for component in weakly_connected_components(&sub) {
                if component.len() < 2 {
                    out.excluded_members.extend(component);
                    continue;
                }
                let inner = sub.induced_subgraph(&component);
                found.push(Chamber {
                    id: String::new(),
                    nec,
                    dico,
                    internal_edges: inner.edge_count(),
                    internal_retweets: inner.total_weight(),
                    members: component,
                });
            }
        }
        let several = found.len() > 1;
        for (j, mut c) in found.into_iter().enumerate() {
            c.id = if several {
                format!("{nec}.{j}")
            } else {
                nec.to_string()
            };
            out.chambers.push(c);
        }
    }
    out.excluded_members.sort();
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringSummary {
    pub chamber: String,
    pub dico: usize,
    pub members: usize,
    pub mean: f64,
}

/// Mean clustering per chamber (within the chamber's own retweet subgraph)
/// against the benchmark of each hosting DiCo: the mean over the largest
/// weakly connected component of the DiCo-induced retweet graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChamberClustering {
    pub chambers: Vec<ClusteringSummary>,
    pub benchmarks: BTreeMap<usize, f64>,
    pub benchmark_sizes: BTreeMap<usize, usize>,
    /// Mean over all chamber members.
    pub pooled: f64,
}

pub fn clustering_report(
    chambers: &EchoChamberSet,
    dicos: &DicoAssignment,
    retweet_graph: &DirectedWeightedGraph,
) -> Result<ChamberClustering> {
    if chambers.is_empty() {
        return Err(Error::InvalidArgument(
            "no echo chambers to report on".into(),
        ));
    }
    let mut summaries = Vec::new();
    let mut sum = 0.0;
    let mut count = 0usize;
    for c in &chambers.chambers {
        let sub = retweet_graph.induced_subgraph(&c.members);
        let report = undirected_clustering(&sub, &c.members)?;
        sum += report.coefficients.values().sum::<f64>();
        count += c.members.len();
        summaries.push(ClusteringSummary {
            chamber: c.id.clone(),
            dico: c.dico,
            members: c.members.len(),
            mean: report.mean,
        });
    }
    let mut benchmarks = BTreeMap::new();
    let mut benchmark_sizes = BTreeMap::new();
    for dico in chambers.chambers.iter().map(|c| c.dico) {
        if benchmarks.contains_key(&dico) {
            continue;
        }
        let users: Vec<&str> = dicos
            .user_ids()
            .iter()
            .zip(dicos.labels())
            .filter(|(_, l)| **l == Some(dico))
            .map(|(u, _)| u.as_str())
            .collect();
        let sub = retweet_graph.induced_subgraph(&users);
        let lwcc = weakly_connected_components(&sub)
            .into_iter()
            .next()
            .unwrap_or_default();
        let report = undirected_clustering(&sub, &lwcc)?;
        benchmarks.insert(dico, report.mean);
        benchmark_sizes.insert(dico, lwcc.len());
    }
    Ok(ChamberClustering {
        chambers: summaries,
        benchmarks,
        benchmark_sizes,
        pooled: sum / count as f64,
    })
}

/// Contracts users to their chamber (or [`OUTSIDE_GROUP`]) and sums retweet
/// weights between groups, self-loops included. Edges lighter than
/// `min_weight` are dropped; every group stays as a node.
pub fn aggregate_flow(
    retweet_graph: &DirectedWeightedGraph,
    chambers: &EchoChamberSet,
    min_weight: u64,
) -> DirectedWeightedGraph {
    let membership = chambers.membership();
    let group = |i: usize| {
        membership
            .get(retweet_graph.id(i))
            .copied()
            .unwrap_or(OUTSIDE_GROUP)
    };
    let mut totals: BTreeMap<(&str, &str), u64> = BTreeMap::new();
    for (s, t, w) in retweet_graph.edges() {
        *totals.entry((group(s), group(t))).or_insert(0) += w;
    }
    let mut b = GraphBuilder::new().with_self_loops();
    for c in &chambers.chambers {
        b.add_node(&c.id);
    }
    b.add_node(OUTSIDE_GROUP);
    for ((s, t), w) in totals {
        if w >= min_weight {
            b.add_edge(s, t, w).expect("self-loops allowed");
        }
    }
    b.build()
}
