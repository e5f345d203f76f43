use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{streams, PipelineConfig};
use crate::community::{child_seed, louvain_shuffled};
use crate::error::{Error, Result};
use crate::graph::{BipartiteGraph, Layer, Partition};
use crate::ingest::Dataset;
use crate::validation::{validated_projection_with, ProjectionMetadata};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NecLayer {
    Users,
    Urls,
}

impl NecLayer {
    fn side(self) -> Layer {
        match self {
            NecLayer::Users => Layer::Top,
            NecLayer::Urls => Layer::Bottom,
        }
    }
}

impl fmt::Display for NecLayer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NecLayer::Users => "users",
            NecLayer::Urls => "urls",
        })
    }
}

impl FromStr for NecLayer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "users" => Ok(NecLayer::Users),
            "urls" => Ok(NecLayer::Urls),
            _ => Err(Error::InvalidArgument(format!(
                "layer must be users or urls, got {s:?}"
            ))),
        }
    }
}

/// Size of one NEC; `shares` counts URL shares with multiplicity (by the
/// member users, or of the member URLs).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NecSummary {
    pub nec: usize,
    pub members: usize,
    pub shares: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NecAssignment {
    layer: NecLayer,
    members: BTreeMap<String, usize>,
    summaries: Vec<NecSummary>,
    layer_size: usize,
    partition: Option<Partition>,
    projection: ProjectionMetadata,
}

impl NecAssignment {
    /// Assignment from explicit groups, without a projection behind it.
    /// Share counts are taken from `dataset`.
    pub fn from_groups<I, S>(dataset: &Dataset, layer: NecLayer, members: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, usize)>,
        S: AsRef<str>,
    {
        let members: BTreeMap<String, usize> = members
            .into_iter()
            .map(|(m, c)| (m.as_ref().to_string(), c))
            .collect();
        for m in members.keys() {
            let known = match layer {
                NecLayer::Users => dataset.user_index(m).is_some(),
                NecLayer::Urls => dataset.url_index(m).is_some(),
            };
            if !known {
                return Err(Error::UnknownMember {
                    kind: if layer == NecLayer::Users {
                        "user"
                    } else {
                        "URL"
                    },
                    id: m.clone(),
                });
            }
        }
        let layer_size = match layer {
            NecLayer::Users => dataset.user_count(),
            NecLayer::Urls => dataset.url_count(),
        };
        let summaries = summarize(dataset, layer, &members);
        Ok(NecAssignment {
            layer,
            members,
            summaries,
            layer_size,
            partition: None,
            projection: ProjectionMetadata {
                layer: layer.side(),
                alpha: 0.0,
                tested_pairs: 0,
                test_family: Default::default(),
                cooccurring_pairs: 0,
                validated_pairs: 0,
                solver_iterations: 0,
                solver_residual: 0.0,
            },
        })
    }

    pub fn layer(&self) -> NecLayer {
        self.layer
    }

    /// Member (user id or canonical URL) → NEC id, for validated members only.
    pub fn members(&self) -> &BTreeMap<String, usize> {
        &self.members
    }

    pub fn nec_of(&self, member: &str) -> Option<usize> {
        self.members.get(member).copied()
    }

    pub fn nec_count(&self) -> usize {
        self.summaries.len()
    }

    pub fn summaries(&self) -> &[NecSummary] {
        &self.summaries
    }

    /// Members grouped by NEC id.
    pub fn groups(&self) -> BTreeMap<usize, Vec<String>> {
        let mut out: BTreeMap<usize, Vec<String>> = BTreeMap::new();
        for (m, &c) in &self.members {
            out.entry(c).or_default().push(m.clone());
        }
        out
    }

    pub fn validated_members(&self) -> usize {
        self.members.len()
    }

    /// Layer nodes of the share graph left out of every NEC.
    pub fn non_validated_members(&self) -> usize {
        self.layer_size - self.members.len()
    }

    pub fn partition(&self) -> Option<&Partition> {
        self.partition.as_ref()
    }

    pub fn projection(&self) -> &ProjectionMetadata {
        &self.projection
    }

    /// CSV rows `layer,member,nec`, sorted by member.
    pub fn write_members_csv<W: Write>(&self, writer: W, header: bool) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(writer);
        if header {
            w.write_record(["layer", "member", "nec"])?;
        }
        let layer = self.layer.to_string();
        for (m, c) in &self.members {
            w.write_record([layer.as_str(), m, &c.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// User × URL graph: linked when the user shared the URL at least once.
fn share_graph(dataset: &Dataset) -> Result<BipartiteGraph> {
    if dataset.shares().is_empty() {
        return Err(Error::NoUrlShares);
    }
    BipartiteGraph::build(
        dataset
            .shares()
            .iter()
            .map(|s| (dataset.user_id(s.user), dataset.url(s.url).0)),
    )
}

/// News-engagement communities: Louvain on the validated projection of the
/// user × URL share graph onto `layer`.
pub fn detect_nec(
    dataset: &Dataset,
    layer: NecLayer,
    config: &PipelineConfig,
) -> Result<NecAssignment> {
    let bipartite = share_graph(dataset)?;
    let side = layer.side();
    let projection = validated_projection_with(&bipartite, side, config.alpha, &config.validation)?;
    let stream = match layer {
        NecLayer::Users => streams::NEC_USERS,
        NecLayer::Urls => streams::NEC_URLS,
    };
    let partition = if projection.is_empty() {
        None
    } else {
        Some(louvain_shuffled(
            &projection.to_graph(),
            config.shuffles,
            child_seed(config.seed, stream),
        )?)
    };

    let members: BTreeMap<String, usize> = partition
        .iter()
        .flat_map(|p| p.iter().map(|(id, c)| (id.to_string(), c)))
        .collect();
    Ok(NecAssignment {
        layer,
        summaries: summarize(dataset, layer, &members),
        members,
        layer_size: bipartite.layer_len(side),
        partition,
        projection: projection.metadata(),
    })
}

fn summarize(
    dataset: &Dataset,
    layer: NecLayer,
    members: &BTreeMap<String, usize>,
) -> Vec<NecSummary> {
    let ids: BTreeSet<usize> = members.values().copied().collect();
    let mut rows: BTreeMap<usize, NecSummary> = ids
        .into_iter()
        .map(|nec| {
            (
                nec,
                NecSummary {
                    nec,
                    members: 0,
                    shares: 0,
                },
            )
        })
        .collect();
    for c in members.values() {
        rows.get_mut(c).expect("known id").members += 1;
    }
    for s in dataset.shares() {
        let key = match layer {
            NecLayer::Users => dataset.user_id(s.user),
            NecLayer::Urls => dataset.url(s.url).0,
        };
        if let Some(c) = members.get(key) {
            rows.get_mut(c).expect("known id").shares += 1;
        }
    }
    rows.into_values().collect()
}
