use crate::error::{Error, Result};
use crate::graph::UndirectedGraph;

/// Weighted Newman–Girvan modularity
/// `Q = (1/2W) Σ_ij [w_ij − s_i s_j / 2W] δ(c_i, c_j)`.
///
/// `assignment[i]` is the community of node `i`; a graph without edges has
/// `Q = 0`.
pub fn modularity(graph: &UndirectedGraph, assignment: &[usize]) -> Result<f64> {
    let n = graph.node_count();
    if assignment.len() != n {
        let missing = graph
            .ids()
            .get(assignment.len())
            .cloned()
            .unwrap_or_default();
        return Err(Error::InvalidArgument(format!(
            "node without community: {missing:?} ({} of {n} nodes assigned)",
            assignment.len()
        )));
    }
    let total = graph.total_weight();
    if total == 0.0 {
        return Ok(0.0);
    }
    let communities = assignment.iter().max().map_or(0, |m| m + 1);
    let mut internal = vec![0.0; communities];
    let mut strength = vec![0.0; communities];
    for (a, b, w) in graph.edges() {
        if assignment[a] == assignment[b] {
            internal[assignment[a]] += w;
        }
    }
    for (i, &c) in assignment.iter().enumerate() {
        strength[c] += graph.strength(i);
    }
    let two_w = 2.0 * total;
    Ok(internal
        .iter()
        .zip(&strength)
        .map(|(l, s)| l / total - (s / two_w) * (s / two_w))
        .sum())
}
