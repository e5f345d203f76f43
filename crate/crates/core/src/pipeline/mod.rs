//! End-to-end stages: discursive communities (DiCo), news-engagement
//! communities (NEC), echo chambers, and the metrics reported on them.

mod chambers;
mod dico;
mod metrics;
mod nec;
mod report;

pub use chambers::{
    aggregate_flow, clustering_report, detect_echo_chambers, Chamber, ChamberClustering,
    ClusteringSummary, EchoChamberSet, OUTSIDE_GROUP,
};
pub use dico::{detect_dico, DicoAssignment, DicoStats};
pub use metrics::{
    purity, trust_histogram, CountingMode, GroupPurity, Groups, HistogramRow, LabelCounts,
    PurityFractions, PurityReport,
};
pub use nec::{detect_nec, NecAssignment, NecLayer, NecSummary};
pub use report::{run_all, PipelineResult, RunManifest};

use serde::{Deserialize, Serialize};

use crate::community::LabelPropagationOptions;
use crate::validation::ValidationOptions;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// FDR level of every validated projection.
    pub alpha: f64,
    /// Louvain node-order shuffles per clustering.
    pub shuffles: usize,
    pub seed: u64,
    pub label_propagation: LabelPropagationOptions,
    /// Aggregated flow edges lighter than this are dropped.
    pub min_flow_weight: u64,
    /// Solver settings and FDR test family of every projection.
    pub validation: ValidationOptions,
    /// Also cluster the unvalidated verified-user projection and report its
    /// modularity.
    pub unvalidated_diagnostic: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            alpha: 0.05,
            shuffles: 1000,
            seed: 0,
            label_propagation: LabelPropagationOptions::default(),
            min_flow_weight: 1000,
            validation: ValidationOptions::default(),
            unvalidated_diagnostic: false,
        }
    }
}

// Independent streams for the randomized stages of one run.
pub(crate) mod streams {
    pub const DICO_LOUVAIN: u64 = 1;
    pub const DICO_PROPAGATION: u64 = 2;
    pub const NEC_USERS: u64 = 3;
    pub const NEC_URLS: u64 = 4;
    pub const DIAGNOSTIC: u64 = 5;
}
