use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cooccurrence::cooccurrences;
use super::fdr::fdr_select_in_family;
use super::poibin::class_pair_distribution;
use crate::bicm::{fit, FitOptions};
use crate::error::Result;
use crate::graph::{BipartiteGraph, Layer, UndirectedGraph};

/// A pair that passed validation, with its co-occurrence and p-value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidatedEdge {
    pub i: usize,
    pub j: usize,
    pub cooccurrence: usize,
    pub pvalue: f64,
}

/// Which pairs count as tests in the FDR correction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestFamily {
    /// Only pairs with at least one co-occurrence.
    #[default]
    CooccurringPairs,
    /// Every unordered pair of the layer; pairs that never co-occur enter
    /// with p = 1.
    AllPairs,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ValidationOptions {
    pub fit: FitOptions,
    pub family: TestFamily,
}

/// Run parameters recorded next to a projection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionMetadata {
    pub layer: Layer,
    pub alpha: f64,
    /// Size of the FDR test family.
    pub tested_pairs: usize,
    pub test_family: TestFamily,
    /// Pairs with at least one co-occurrence.
    pub cooccurring_pairs: usize,
    pub validated_pairs: usize,
    pub solver_iterations: usize,
    pub solver_residual: f64,
}

/// Undirected, unweighted graph on one layer whose links passed the
/// FDR-corrected Poisson-Binomial test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidatedProjection {
    layer: Layer,
    node_ids: Vec<String>,
    edges: Vec<ValidatedEdge>,
    alpha: f64,
    family: TestFamily,
    tested_pairs: usize,
    cooccurring_pairs: usize,
    solver_iterations: usize,
    solver_residual: f64,
}

impl ValidatedProjection {
    pub fn layer(&self) -> Layer {
        self.layer
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn tested_pairs(&self) -> usize {
        self.tested_pairs
    }

    /// Validated pairs sorted by `(i, j)`, indices into the projected layer.
    pub fn edges(&self) -> &[ValidatedEdge] {
        &self.edges
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn node_id(&self, index: usize) -> &str {
        &self.node_ids[index]
    }

    /// Layer nodes with at least one validated link, in layer order.
    pub fn validated_nodes(&self) -> Vec<usize> {
        let set: BTreeSet<usize> = self.edges.iter().flat_map(|e| [e.i, e.j]).collect();
        set.into_iter().collect()
    }

    /// The projection as a graph on its validated nodes, unit weights.
    pub fn to_graph(&self) -> UndirectedGraph {
        let nodes = self.validated_nodes();
        let local: BTreeMap<usize, usize> =
            nodes.iter().enumerate().map(|(k, &n)| (n, k)).collect();
        let ids = nodes.iter().map(|&n| self.node_ids[n].clone()).collect();
        let edges: Vec<_> = self
            .edges
            .iter()
            .map(|e| (local[&e.i], local[&e.j], 1.0))
            .collect();
        UndirectedGraph::from_edges(ids, &edges).expect("validated pairs are valid edges")
    }

    pub fn metadata(&self) -> ProjectionMetadata {
        ProjectionMetadata {
            layer: self.layer,
            alpha: self.alpha,
            tested_pairs: self.tested_pairs,
            test_family: self.family,
            cooccurring_pairs: self.cooccurring_pairs,
            validated_pairs: self.edges.len(),
            solver_iterations: self.solver_iterations,
            solver_residual: self.solver_residual,
        }
    }

    /// Writes `i<TAB>j<TAB>V<TAB>pvalue` lines with node identifiers.
    pub fn write_tsv<W: Write>(&self, mut writer: W) -> Result<()> {
        for e in &self.edges {
            writeln!(
                writer,
                "{}\t{}\t{}\t{}",
                self.node_ids[e.i], self.node_ids[e.j], e.cooccurrence, e.pvalue
            )?;
        }
        Ok(())
    }

    pub fn write_metadata_json<W: Write>(&self, writer: W) -> Result<()> {
        serde_json::to_writer_pretty(writer, &self.metadata())?;
        Ok(())
    }
}

/// Fits the BiCM with default options and validates the projection on
/// `layer` at FDR level `alpha`.
pub fn validated_projection(
    graph: &BipartiteGraph,
    layer: Layer,
    alpha: f64,
) -> Result<ValidatedProjection> {
    validated_projection_with(graph, layer, alpha, &ValidationOptions::default())
}

pub fn validated_projection_with(
    graph: &BipartiteGraph,
    layer: Layer,
    alpha: f64,
    options: &ValidationOptions,
) -> Result<ValidatedProjection> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(crate::Error::InvalidArgument(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    let model = fit(graph, &options.fit)?;
    let table = cooccurrences(graph, layer);

    // p-values depend on the pair only through its two degree classes.
    let class_pairs: BTreeSet<(usize, usize)> = table
        .iter()
        .map(|((i, j), _)| {
            let ci = model.class_of(layer, i).expect("valid index");
            let cj = model.class_of(layer, j).expect("valid index");
            (ci.min(cj), ci.max(cj))
        })
        .collect();
    let class_pairs: Vec<(usize, usize)> = class_pairs.into_iter().collect();
    let distributions: BTreeMap<(usize, usize), _> = class_pairs
        .par_iter()
        .map(|&(ci, cj)| ((ci, cj), class_pair_distribution(&model, layer, ci, cj)))
        .collect::<Vec<_>>()
        .into_iter()
        .collect();

    let tests: Vec<((usize, usize, usize), f64)> = table
        .iter()
        .map(|((i, j), v)| {
            let ci = model.class_of(layer, i).expect("valid index");
            let cj = model.class_of(layer, j).expect("valid index");
            let p = distributions[&(ci.min(cj), ci.max(cj))].upper_tail(v);
            ((i, j, v), p)
        })
        .collect();
    let pvalue_of: BTreeMap<(usize, usize), f64> =
        tests.iter().map(|&((i, j, _), p)| ((i, j), p)).collect();
    let layer_len = graph.layer_len(layer);
    let family_size = match options.family {
        TestFamily::AllPairs => layer_len * layer_len.saturating_sub(1) / 2,
        TestFamily::CooccurringPairs => tests.len(),
    };
    let mut edges: Vec<ValidatedEdge> = fdr_select_in_family(&tests, alpha, family_size)
        .into_iter()
        .map(|(i, j, v)| ValidatedEdge {
            i,
            j,
            cooccurrence: v,
            pvalue: pvalue_of[&(i, j)],
        })
        .collect();
    edges.sort_by_key(|e| (e.i, e.j));

    Ok(ValidatedProjection {
        layer,
        node_ids: graph.ids(layer).map(str::to_owned).collect(),
        edges,
        alpha,
        family: options.family,
        tested_pairs: family_size,
        cooccurring_pairs: tests.len(),
        solver_iterations: model.iterations(),
        solver_residual: model.tolerance_achieved(),
    })
}
