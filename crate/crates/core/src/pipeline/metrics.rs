use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{Dataset, TrustLabel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CountingMode {
    /// Each URL once per group.
    Distinct,
    /// Every share, repeats included.
    Multiplicity,
}

/// Named groups of users, or of canonical URLs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Groups {
    Users(BTreeMap<String, Vec<String>>),
    Urls(BTreeMap<String, Vec<String>>),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelCounts {
    pub t: usize,
    pub n: usize,
    pub unc: usize,
    /// Platform and satire items, kept out of the purity denominators.
    pub excluded: usize,
}

impl LabelCounts {
    fn add(&mut self, label: TrustLabel) {
        match label {
            TrustLabel::Trustworthy => self.t += 1,
            TrustLabel::NotTrustworthy => self.n += 1,
            TrustLabel::Unclassified => self.unc += 1,
            TrustLabel::Platform | TrustLabel::Satire => self.excluded += 1,
        }
    }

    fn merge(&mut self, other: &LabelCounts) {
        self.t += other.t;
        self.n += other.n;
        self.unc += other.unc;
        self.excluded += other.excluded;
    }

    pub fn total(&self) -> usize {
        self.t + self.n + self.unc
    }

    /// `None` when nothing counts towards trust.
    pub fn fractions(&self) -> Option<PurityFractions> {
        let total = self.total();
        if total == 0 {
            return None;
        }
        let t = self.t as f64 / total as f64;
        let n = self.n as f64 / total as f64;
        // defining UNC as the complement keeps (t + n) + unc == 1 exact
        Some(PurityFractions {
            t,
            n,
            unc: 1.0 - (t + n),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PurityFractions {
    pub t: f64,
    pub n: f64,
    pub unc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupPurity {
    pub group: String,
    pub counts: LabelCounts,
    pub purity: Option<PurityFractions>,
}

impl GroupPurity {
    fn new(group: String, counts: LabelCounts) -> Self {
        GroupPurity {
            group,
            purity: counts.fractions(),
            counts,
        }
    }
}

/// Purity of each group, of all groups pooled (summed counts), and of the
/// users or URLs outside every group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PurityReport {
    pub mode: CountingMode,
    pub groups: Vec<GroupPurity>,
    pub pooled: GroupPurity,
    pub complement: GroupPurity,
}

/// Counts for each group and for the complement, in group-name order.
fn count_groups(
    dataset: &Dataset,
    groups: &Groups,
    mode: CountingMode,
) -> Result<(Vec<(String, LabelCounts)>, LabelCounts)> {
    let label = |url: usize| dataset.url(url).1.label;
    let count = |items: &mut dyn Iterator<Item = usize>| {
        let mut c = LabelCounts::default();
        match mode {
            CountingMode::Distinct => items
                .collect::<BTreeSet<_>>()
                .into_iter()
                .for_each(|u| c.add(label(u))),
            CountingMode::Multiplicity => items.for_each(|u| c.add(label(u))),
        }
        c
    };
    let mut out = Vec::new();
    match groups {
        Groups::Users(map) => {
            let mut by_user: Vec<Vec<usize>> = vec![Vec::new(); dataset.user_count()];
            for s in dataset.shares() {
                by_user[s.user].push(s.url);
            }
            let mut grouped = HashSet::new();
            for (name, users) in map {
                let mut idx = Vec::with_capacity(users.len());
                for u in users {
                    let i = dataset.user_index(u).ok_or_else(|| Error::UnknownMember {
                        kind: "user",
                        id: u.clone(),
                    })?;
                    grouped.insert(i);
                    idx.push(i);
                }
                out.push((
                    name.clone(),
                    count(&mut idx.iter().flat_map(|&i| by_user[i].iter().copied())),
                ));
            }
            let rest = (0..dataset.user_count()).filter(|i| !grouped.contains(i));
            let complement = count(&mut rest.flat_map(|i| by_user[i].iter().copied()));
            Ok((out, complement))
        }
        Groups::Urls(map) => {
            let mut multiplicity = vec![0usize; dataset.url_count()];
            for s in dataset.shares() {
                multiplicity[s.url] += 1;
            }
            let expand = |urls: &mut dyn Iterator<Item = usize>| -> Vec<usize> {
                match mode {
                    CountingMode::Distinct => urls.collect(),
                    CountingMode::Multiplicity => urls
                        .flat_map(|u| std::iter::repeat_n(u, multiplicity[u]))
                        .collect(),
                }
            };
            let mut grouped = HashSet::new();
            for (name, urls) in map {
                let mut idx = Vec::with_capacity(urls.len());
                for u in urls {
                    let i = dataset.url_index(u).ok_or_else(|| Error::UnknownMember {
                        kind: "URL",
                        id: u.clone(),
                    })?;
                    grouped.insert(i);
                    idx.push(i);
                }
                out.push((
                    name.clone(),
                    count(&mut expand(&mut idx.into_iter()).into_iter()),
                ));
            }
            let mut rest = (0..dataset.url_count()).filter(|i| !grouped.contains(i));
            let complement = count(&mut expand(&mut rest).into_iter());
            Ok((out, complement))
        }
    }
}

/// Fractions of T, N and UNC items per group. Platform and satire URLs are
/// not counted.
pub fn purity(groups: &Groups, dataset: &Dataset, mode: CountingMode) -> Result<PurityReport> {
    let (per_group, complement) = count_groups(dataset, groups, mode)?;
    let mut pooled = LabelCounts::default();
    for (_, c) in &per_group {
        pooled.merge(c);
    }
    Ok(PurityReport {
        mode,
        groups: per_group
            .into_iter()
            .map(|(g, c)| GroupPurity::new(g, c))
            .collect(),
        pooled: GroupPurity::new("pooled".into(), pooled),
        complement: GroupPurity::new("complement".into(), complement),
    })
}

/// T/N/UNC counts of one group, with multiplicity and over distinct URLs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistogramRow {
    pub grouping: String,
    pub group: String,
    pub label: String,
    pub shares: usize,
    pub distinct_urls: usize,
}

/// Histogram rows for the whole dataset (grouping `dataset`, group `all`)
/// followed by every group of every named grouping.
pub fn trust_histogram(
    dataset: &Dataset,
    groupings: &[(String, Groups)],
) -> Result<Vec<HistogramRow>> {
    let everyone: Vec<String> = dataset.users().map(|(u, _)| u.to_string()).collect();
    let whole = (
        "dataset".to_string(),
        Groups::Users(BTreeMap::from([("all".to_string(), everyone)])),
    );
    let mut rows = Vec::new();
    for (grouping, groups) in std::iter::once(&whole).chain(groupings) {
        let (multi, _) = count_groups(dataset, groups, CountingMode::Multiplicity)?;
        let (distinct, _) = count_groups(dataset, groups, CountingMode::Distinct)?;
        for ((group, m), (_, d)) in multi.into_iter().zip(distinct) {
            for (label, shares, distinct_urls) in
                [("T", m.t, d.t), ("N", m.n, d.n), ("UNC", m.unc, d.unc)]
            {
                rows.push(HistogramRow {
                    grouping: grouping.clone(),
                    group: group.clone(),
                    label: label.to_string(),
                    shares,
                    distinct_urls,
                });
            }
        }
    }
    Ok(rows)
}

pub(crate) fn write_histogram_csv<W: Write>(rows: &[HistogramRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
