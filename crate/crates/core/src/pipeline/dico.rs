use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{streams, PipelineConfig};
use crate::community::{child_seed, louvain_shuffled, propagate_labels, SeededLabeling};
use crate::error::{Error, Result};
use crate::graph::{BipartiteGraph, Layer, Partition};
use crate::ingest::Dataset;
use crate::validation::{cooccurrences, validated_projection_with, ProjectionMetadata};

/// Record counts of one DiCo, or of the unassigned remainder (`dico =
/// "none"`). Shares are fractions of the dataset totals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DicoStats {
    pub dico: String,
    pub users: usize,
    pub verified_users: usize,
    pub tweets: usize,
    pub retweets: usize,
    pub tweets_with_urls: usize,
    pub retweets_with_urls: usize,
    pub user_share: f64,
    pub tweet_share: f64,
    pub retweet_share: f64,
    pub tweet_with_url_share: f64,
    pub retweet_with_url_share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DicoAssignment {
    user_ids: Vec<String>,
    labels: Vec<Option<usize>>,
    verified_core: Option<Partition>,
    projection: ProjectionMetadata,
    sweeps: usize,
    converged: bool,
    stats: Vec<DicoStats>,
    unvalidated_modularity: Option<f64>,
}

impl DicoAssignment {
    /// Assignment from explicit labels; users not listed get no DiCo.
    pub fn from_labels<I, S>(dataset: &Dataset, labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, usize)>,
        S: AsRef<str>,
    {
        let mut out = vec![None; dataset.user_count()];
        for (user, dico) in labels {
            let user = user.as_ref();
            let i = dataset
                .user_index(user)
                .ok_or_else(|| Error::UnknownMember {
                    kind: "user",
                    id: user.to_string(),
                })?;
            out[i] = Some(dico);
        }
        Ok(DicoAssignment {
            user_ids: dataset.users().map(|(id, _)| id.to_string()).collect(),
            stats: dico_stats(dataset, &out),
            labels: out,
            verified_core: None,
            projection: ProjectionMetadata {
                layer: Layer::Top,
                alpha: 0.0,
                tested_pairs: 0,
                test_family: Default::default(),
                cooccurring_pairs: 0,
                validated_pairs: 0,
                solver_iterations: 0,
                solver_residual: 0.0,
            },
            sweeps: 0,
            converged: true,
            unvalidated_modularity: None,
        })
    }

    /// DiCo of each dataset user, indexed like the dataset.
    pub fn labels(&self) -> &[Option<usize>] {
        &self.labels
    }

    pub fn user_ids(&self) -> &[String] {
        &self.user_ids
    }

    pub fn dico_of(&self, user: &str) -> Option<usize> {
        let i = self.user_ids.iter().position(|u| u == user)?;
        self.labels[i]
    }

    /// Louvain partition of the validated verified-user projection; `None`
    /// when no pair validated.
    pub fn verified_core(&self) -> Option<&Partition> {
        self.verified_core.as_ref()
    }

    pub fn projection(&self) -> &ProjectionMetadata {
        &self.projection
    }

    pub fn sweeps(&self) -> usize {
        self.sweeps
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    /// One row per DiCo in id order, then the `none` row.
    pub fn stats(&self) -> &[DicoStats] {
        &self.stats
    }

    pub fn unvalidated_modularity(&self) -> Option<f64> {
        self.unvalidated_modularity
    }

    /// Distinct DiCo ids in ascending order.
    pub fn dico_ids(&self) -> Vec<usize> {
        let set: std::collections::BTreeSet<usize> =
            self.labels.iter().flatten().copied().collect();
        set.into_iter().collect()
    }

    /// CSV `node,community,seed`; seeds are the users of the verified core.
    pub fn write_labels_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["node", "community", "seed"])?;
        let seeds: std::collections::HashSet<&str> = self
            .verified_core
            .iter()
            .flat_map(|c| c.node_ids().iter().map(String::as_str))
            .collect();
        for (user, label) in self.user_ids.iter().zip(&self.labels) {
            let label = label.map_or_else(|| "unlabeled".to_string(), |l| l.to_string());
            let seed = seeds.contains(user.as_str());
            w.write_record([user.as_str(), &label, if seed { "true" } else { "false" }])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_stats_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for row in &self.stats {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Verified × unverified bipartite graph: linked when either retweeted the
/// other at least once.
fn seed_layer_graph(dataset: &Dataset) -> Result<BipartiteGraph> {
    let verified: Vec<bool> = dataset.users().map(|(_, u)| u.verified).collect();
    if !verified.iter().any(|v| *v) {
        return Err(Error::NoSeedLayer);
    }
    let g = dataset.retweet_graph();
    let edges: Vec<(&str, &str)> = g
        .edges()
        .filter(|&(s, t, _)| verified[s] != verified[t])
        .map(|(s, t, _)| {
            if verified[s] {
                (g.id(s), g.id(t))
            } else {
                (g.id(t), g.id(s))
            }
        })
        .collect();
    if edges.is_empty() {
        return Err(Error::NoSeedLayer);
    }
    BipartiteGraph::build(edges)
}

/// Discursive communities: Louvain on the validated verified-user
/// projection, spread to everyone else by label propagation on the retweet
/// network.
pub fn detect_dico(dataset: &Dataset, config: &PipelineConfig) -> Result<DicoAssignment> {
    let bipartite = seed_layer_graph(dataset)?;
    let projection =
        validated_projection_with(&bipartite, Layer::Top, config.alpha, &config.validation)?;

    let verified_core = if projection.is_empty() {
        None
    } else {
        Some(louvain_shuffled(
            &projection.to_graph(),
            config.shuffles,
            child_seed(config.seed, streams::DICO_LOUVAIN),
        )?)
    };

    let user_ids: Vec<String> = dataset.users().map(|(id, _)| id.to_string()).collect();
    let (labels, sweeps, converged) = match &verified_core {
        Some(core) => {
            let start = SeededLabeling::new(dataset.retweet_graph(), core.iter())?;
            let out = propagate_labels(
                dataset.retweet_graph(),
                &start,
                config.label_propagation,
                child_seed(config.seed, streams::DICO_PROPAGATION),
            )?;
            if !out.converged() {
                log::warn!(
                    "label propagation stopped after {} sweeps without converging",
                    out.iterations()
                );
            }
            (out.labels().to_vec(), out.iterations(), out.converged())
        }
        None => {
            log::warn!("no verified pair validated; every user stays without DiCo");
            (vec![None; user_ids.len()], 0, true)
        }
    };

    let unvalidated_modularity = if config.unvalidated_diagnostic {
        let weighted = cooccurrences(&bipartite, Layer::Top).to_weighted_graph(&bipartite);
        Some(
            louvain_shuffled(
                &weighted,
                config.shuffles,
                child_seed(config.seed, streams::DIAGNOSTIC),
            )?
            .modularity(),
        )
    } else {
        None
    };

    let stats = dico_stats(dataset, &labels);
    Ok(DicoAssignment {
        user_ids,
        labels,
        verified_core,
        projection: projection.metadata(),
        sweeps,
        converged,
        stats,
        unvalidated_modularity,
    })
}

fn dico_stats(dataset: &Dataset, labels: &[Option<usize>]) -> Vec<DicoStats> {
    let groups = labels.iter().flatten().max().map_or(0, |m| m + 1);
    let mut rows: Vec<DicoStats> = (0..=groups)
        .map(|g| DicoStats {
            dico: if g == groups {
                "none".into()
            } else {
                g.to_string()
            },
            users: 0,
            verified_users: 0,
            tweets: 0,
            retweets: 0,
            tweets_with_urls: 0,
            retweets_with_urls: 0,
            user_share: 0.0,
            tweet_share: 0.0,
            retweet_share: 0.0,
            tweet_with_url_share: 0.0,
            retweet_with_url_share: 0.0,
        })
        .collect();
    for ((_, u), label) in dataset.users().zip(labels) {
        let row = &mut rows[label.unwrap_or(groups)];
        row.users += 1;
        row.verified_users += usize::from(u.verified);
        row.tweets += u.tweets;
        row.retweets += u.retweets;
        row.tweets_with_urls += u.tweets_with_urls;
        row.retweets_with_urls += u.retweets_with_urls;
    }
    let total = |f: fn(&DicoStats) -> usize, rows: &[DicoStats]| rows.iter().map(f).sum::<usize>();
    let share = |x: usize, t: usize| if t == 0 { 0.0 } else { x as f64 / t as f64 };
    let (tu, tt, tr) = (
        total(|r| r.users, &rows),
        total(|r| r.tweets, &rows),
        total(|r| r.retweets, &rows),
    );
    let (ttu, tru) = (
        total(|r| r.tweets_with_urls, &rows),
        total(|r| r.retweets_with_urls, &rows),
    );
    for r in &mut rows {
        r.user_share = share(r.users, tu);
        r.tweet_share = share(r.tweets, tt);
        r.retweet_share = share(r.retweets, tr);
        r.tweet_with_url_share = share(r.tweets_with_urls, ttu);
        r.retweet_with_url_share = share(r.retweets_with_urls, tru);
    }
    rows
}
