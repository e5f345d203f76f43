use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::chambers::{
    aggregate_flow, clustering_report, detect_echo_chambers, ChamberClustering, EchoChamberSet,
};
use super::dico::{detect_dico, DicoAssignment};
use super::metrics::{
    purity, trust_histogram, write_histogram_csv, CountingMode, Groups, HistogramRow, PurityReport,
};
use super::nec::{detect_nec, NecAssignment, NecLayer};
use super::{streams, PipelineConfig};
use crate::community::child_seed;
use crate::error::Result;
use crate::graph::DirectedWeightedGraph;
use crate::ingest::{Dataset, IngestStats};
use crate::validation::ProjectionMetadata;

/// Everything one run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineResult {
    pub config: PipelineConfig,
    pub dico: DicoAssignment,
    pub user_necs: NecAssignment,
    pub url_necs: NecAssignment,
    pub chambers: EchoChamberSet,
    pub clustering: Option<ChamberClustering>,
    /// Aggregated flow after the weight filter.
    pub flow: DirectedWeightedGraph,
    /// Total aggregated weight before the filter.
    pub flow_total_weight: u64,
    /// Keyed `grouping/mode`.
    pub purity: BTreeMap<String, PurityReport>,
    pub histogram: Vec<HistogramRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub parameters: PipelineConfig,
    pub stage_seeds: BTreeMap<String, u64>,
    pub ingest: IngestStats,
    pub users: usize,
    pub verified_users: usize,
    pub urls: usize,
    pub tweets: usize,
    pub retweets: usize,
    pub dico_projection: ProjectionMetadata,
    pub user_nec_projection: ProjectionMetadata,
    pub url_nec_projection: ProjectionMetadata,
    pub propagation_sweeps: usize,
    pub propagation_converged: bool,
    pub unvalidated_dico_modularity: Option<f64>,
    pub dicos: usize,
    pub user_necs: usize,
    pub url_necs: usize,
    pub chambers: usize,
    pub chamber_users: usize,
}

fn groups_of<K: ToString>(
    pairs: impl IntoIterator<Item = (K, String)>,
) -> BTreeMap<String, Vec<String>> {
    let mut out: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for (k, m) in pairs {
        out.entry(k.to_string()).or_default().push(m);
    }
    out
}

/// DiCo, NEC (both layers), chambers and all metrics for `dataset`.
pub fn run_all(dataset: &Dataset, config: &PipelineConfig) -> Result<PipelineResult> {
    let (dico, (user_necs, url_necs)) = rayon::join(
        || detect_dico(dataset, config),
        || {
            rayon::join(
                || detect_nec(dataset, NecLayer::Users, config),
                || detect_nec(dataset, NecLayer::Urls, config),
            )
        },
    );
    let (dico, user_necs, url_necs) = (dico?, user_necs?, url_necs?);
    let chambers = detect_echo_chambers(dataset, &dico, &user_necs)?;
    let clustering = if chambers.is_empty() {
        None
    } else {
        Some(clustering_report(
            &chambers,
            &dico,
            dataset.retweet_graph(),
        )?)
    };
    let flow = aggregate_flow(dataset.retweet_graph(), &chambers, config.min_flow_weight);
    let flow_total_weight = aggregate_flow(dataset.retweet_graph(), &chambers, 0).total_weight();

    let dico_groups = Groups::Users(groups_of(
        dico.user_ids()
            .iter()
            .zip(dico.labels())
            .filter_map(|(u, l)| l.map(|l| (l, u.clone()))),
    ));
    let user_nec_groups = Groups::Users(groups_of(
        user_necs.members().iter().map(|(m, c)| (*c, m.clone())),
    ));
    let url_nec_groups = Groups::Urls(groups_of(
        url_necs.members().iter().map(|(m, c)| (*c, m.clone())),
    ));
    let chamber_groups =
        Groups::Users(groups_of(chambers.chambers.iter().flat_map(|c| {
            c.members.iter().map(move |m| (c.id.clone(), m.clone()))
        })));

    let groupings = [
        ("dicos".to_string(), dico_groups),
        ("user_necs".to_string(), user_nec_groups),
        ("url_necs".to_string(), url_nec_groups),
        ("echo_chambers".to_string(), chamber_groups),
    ];
    let mut reports = BTreeMap::new();
    for (name, groups) in &groupings {
        for (mode, tag) in [
            (CountingMode::Distinct, "distinct"),
            (CountingMode::Multiplicity, "multiplicity"),
        ] {
            reports.insert(format!("{name}/{tag}"), purity(groups, dataset, mode)?);
        }
    }
    let histogram = trust_histogram(dataset, &groupings)?;

    Ok(PipelineResult {
        config: config.clone(),
        dico,
        user_necs,
        url_necs,
        chambers,
        clustering,
        flow,
        flow_total_weight,
        purity: reports,
        histogram,
    })
}

#[derive(Serialize)]
struct ChambersDoc<'a> {
    chambers: &'a EchoChamberSet,
    clustering: &'a Option<ChamberClustering>,
}

impl PipelineResult {
    pub fn manifest(&self, dataset: &Dataset) -> RunManifest {
        let seed = self.config.seed;
        let stage_seeds = [
            ("dico_louvain", streams::DICO_LOUVAIN),
            ("dico_propagation", streams::DICO_PROPAGATION),
            ("nec_users_louvain", streams::NEC_USERS),
            ("nec_urls_louvain", streams::NEC_URLS),
            ("diagnostic_louvain", streams::DIAGNOSTIC),
        ]
        .into_iter()
        .map(|(k, s)| (k.to_string(), child_seed(seed, s)))
        .collect();
        RunManifest {
            version: env!("CARGO_PKG_VERSION").to_string(),
            parameters: self.config.clone(),
            stage_seeds,
            ingest: dataset.stats().clone(),
            users: dataset.user_count(),
            verified_users: dataset.verified_count(),
            urls: dataset.url_count(),
            tweets: dataset.tweet_count(),
            retweets: dataset.retweet_count(),
            dico_projection: self.dico.projection().clone(),
            user_nec_projection: self.user_necs.projection().clone(),
            url_nec_projection: self.url_necs.projection().clone(),
            propagation_sweeps: self.dico.sweeps(),
            propagation_converged: self.dico.converged(),
            unvalidated_dico_modularity: self.dico.unvalidated_modularity(),
            dicos: self.dico.dico_ids().len(),
            user_necs: self.user_necs.nec_count(),
            url_necs: self.url_necs.nec_count(),
            chambers: self.chambers.chambers.len(),
            chamber_users: self.chambers.member_count(),
        }
    }

    /// Writes the report bundle into `dir` (created if missing).
    pub fn write_bundle(&self, dataset: &Dataset, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let create = |name: &str| -> Result<BufWriter<File>> {
            Ok(BufWriter::new(File::create(dir.join(name))?))
        };

        self.dico.write_stats_csv(create("dico_stats.csv")?)?;

        let mut nec = create("nec_members.csv")?;
        self.user_necs.write_members_csv(&mut nec, true)?;
        self.url_necs.write_members_csv(&mut nec, false)?;
        nec.flush()?;

        let mut f = create("chambers.json")?;
        serde_json::to_writer_pretty(
            &mut f,
            &ChambersDoc {
                chambers: &self.chambers,
                clustering: &self.clustering,
            },
        )?;
        f.flush()?;

        let mut w = csv::Writer::from_writer(create("flow_edges.csv")?);
        w.write_record(["source", "target", "weight"])?;
        for (s, t, wgt) in self.flow.edges() {
            w.write_record([self.flow.id(s), self.flow.id(t), &wgt.to_string()])?;
        }
        w.flush()?;

        let mut f = create("purity.json")?;
        serde_json::to_writer_pretty(&mut f, &self.purity)?;
        f.flush()?;

        write_histogram_csv(&self.histogram, create("trust_histogram.csv")?)?;

        let mut f = create("manifest.json")?;
        serde_json::to_writer_pretty(&mut f, &self.manifest(dataset))?;
        f.flush()?;
        Ok(())
    }
}
