use std::collections::{BTreeSet, HashMap, HashSet};
use std::io::{BufRead, Read, Write};

use indexmap::IndexMap;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::labels::{TrustLabel, TrustLabelTable};
use super::url::{canonicalize_url, extract_domain, Canonicalizer, UrlFlag};
use crate::error::{Error, Result};
use crate::graph::{DirectedWeightedGraph, GraphBuilder};

/// One line of the input stream.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TweetRecord {
    pub tweet_id: String,
    pub user_id: String,
    pub verified: bool,
    #[serde(default)]
    pub retweet_of_user: Option<String>,
    #[serde(default)]
    pub urls: Vec<String>,
    pub timestamp: String,
}

impl TweetRecord {
    fn check(&self) -> std::result::Result<(), String> {
        if self.tweet_id.is_empty() || self.user_id.is_empty() {
            return Err("empty tweet_id or user_id".into());
        }
        if self.retweet_of_user.as_deref() == Some(self.user_id.as_str()) {
            return Err("user retweets itself".into());
        }
        if self.retweet_of_user.as_deref() == Some("") {
            return Err("empty retweet_of_user".into());
        }
        chrono::DateTime::parse_from_rfc3339(&self.timestamp)
            .map_err(|e| format!("timestamp: {e}"))?;
        Ok(())
    }
}

/// Per-user record counts. Retweet-only targets appear with zero counts and
/// `verified = false`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct User {
    pub verified: bool,
    pub tweets: usize,
    pub retweets: usize,
    pub tweets_with_urls: usize,
    pub retweets_with_urls: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UrlEntry {
    /// Registrable domain, if the canonical URL has one.
    pub domain: Option<String>,
    pub label: TrustLabel,
    pub flag: Option<UrlFlag>,
}

/// A URL occurrence in a record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Share {
    pub user: usize,
    pub url: usize,
    pub record: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestStats {
    pub lines: usize,
    pub records: usize,
    pub malformed: usize,
    pub duplicates: usize,
    pub invalid_urls: usize,
    pub flagged_urls: usize,
}

#[derive(Default)]
pub struct IngestOptions {
    /// Abort on the first malformed line instead of skipping it.
    pub strict: bool,
    pub canonicalizer: Canonicalizer,
}

/// Leading bytes of every snapshot file.
pub const SNAPSHOT_MAGIC: &[u8; 8] = b"ECHODET\x01";

/// Ingested interaction records: users, the retweet graph (retweeter →
/// author, weighted by count) and URL shares keyed by canonical URL.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    records: Vec<TweetRecord>,
    users: IndexMap<String, User>,
    retweets: DirectedWeightedGraph,
    urls: IndexMap<String, UrlEntry>,
    shares: Vec<Share>,
    stats: IngestStats,
}

/// Reads JSONL tweet records.
pub fn parse_tweets<R: BufRead>(reader: R, options: &IngestOptions) -> Result<Dataset> {
    let mut stats = IngestStats::default();
    let mut seen = HashSet::new();
    let mut records = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        stats.lines += 1;
        let parsed = serde_json::from_str::<TweetRecord>(&line)
            .map_err(|e| e.to_string())
            .and_then(|r| r.check().map(|_| r));
        match parsed {
            Ok(r) => {
                if seen.insert(r.tweet_id.clone()) {
                    records.push(r);
                } else {
                    log::warn!("line {}: duplicate tweet_id {}", n + 1, r.tweet_id);
                    stats.duplicates += 1;
                }
            }
            Err(message) if options.strict => {
                return Err(Error::Parse {
                    line: n + 1,
                    message,
                })
            }
            Err(message) => {
                log::warn!("line {}: skipped: {message}", n + 1);
                stats.malformed += 1;
            }
        }
    }
    Dataset::build(records, &options.canonicalizer, stats)
}

impl Dataset {
    /// Builds a dataset from already-parsed records. Records with duplicate
    /// ids after the first are dropped.
    pub fn from_records(records: Vec<TweetRecord>, canonicalizer: &Canonicalizer) -> Result<Self> {
        let mut stats = IngestStats {
            lines: records.len(),
            ..Default::default()
        };
        let mut seen = HashSet::new();
        let mut kept = Vec::with_capacity(records.len());
        for r in records {
            if let Err(message) = r.check() {
                return Err(Error::InvalidArgument(format!(
                    "tweet {}: {message}",
                    r.tweet_id
                )));
            }
            if seen.insert(r.tweet_id.clone()) {
                kept.push(r);
            } else {
                stats.duplicates += 1;
            }
        }
        Self::build(kept, canonicalizer, stats)
    }

    fn build(
        records: Vec<TweetRecord>,
        canonicalizer: &Canonicalizer,
        mut stats: IngestStats,
    ) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::NoRecords);
        }
        stats.records = records.len();

        let distinct: Vec<&str> = records
            .iter()
            .flat_map(|r| r.urls.iter().map(String::as_str))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let resolved: HashMap<&str, Option<(String, Option<UrlFlag>)>> = distinct
            .par_iter()
            .map(|raw| {
                (
                    *raw,
                    canonicalize_url(raw, canonicalizer)
                        .ok()
                        .map(|c| (c.url, c.flag)),
                )
            })
            .collect();

        let mut users: IndexMap<String, User> = IndexMap::new();
        let mut graph = GraphBuilder::new();
        let mut urls: IndexMap<String, UrlEntry> = IndexMap::new();
        let mut shares = Vec::new();
        for (ri, r) in records.iter().enumerate() {
            let entry = users.entry(r.user_id.clone());
            let ui = entry.index();
            entry.or_default();
            graph.add_node(&r.user_id);
            let mut any_url = false;
            for raw in &r.urls {
                let Some((canonical, flag)) = &resolved[raw.as_str()] else {
                    stats.invalid_urls += 1;
                    continue;
                };
                let entry = urls.entry(canonical.clone());
                let url = entry.index();
                entry.or_insert_with(|| {
                    if flag.is_some() {
                        stats.flagged_urls += 1;
                    }
                    UrlEntry {
                        domain: extract_domain(canonical).ok(),
                        label: TrustLabel::Unclassified,
                        flag: *flag,
                    }
                });
                shares.push(Share {
                    user: ui,
                    url,
                    record: ri,
                });
                any_url = true;
            }
            let user = &mut users[ui];
            user.verified |= r.verified;
            match &r.retweet_of_user {
                Some(author) => {
                    user.retweets += 1;
                    user.retweets_with_urls += usize::from(any_url);
                    users.entry(author.clone()).or_default();
                    graph.add_edge(&r.user_id, author, 1)?;
                }
                None => {
                    user.tweets += 1;
                    user.tweets_with_urls += usize::from(any_url);
                }
            }
        }
        let retweets = graph.build();
        debug_assert!(users.keys().zip(retweets.ids()).all(|(a, b)| a == b));
        Ok(Dataset {
            records,
            users,
            retweets,
            urls,
            shares,
            stats,
        })
    }

    pub fn records(&self) -> &[TweetRecord] {
        &self.records
    }

    pub fn stats(&self) -> &IngestStats {
        &self.stats
    }

    pub fn user_count(&self) -> usize {
        self.users.len()
    }

    /// Users in first-appearance order; indices match the retweet graph.
    pub fn users(&self) -> impl Iterator<Item = (&str, &User)> + '_ {
        self.users.iter().map(|(id, u)| (id.as_str(), u))
    }

    pub fn user(&self, id: &str) -> Option<&User> {
        self.users.get(id)
    }

    pub fn user_index(&self, id: &str) -> Option<usize> {
        self.users.get_index_of(id)
    }

    pub fn user_id(&self, index: usize) -> &str {
        self.users.get_index(index).expect("user index in range").0
    }

    pub fn verified_count(&self) -> usize {
        self.users.values().filter(|u| u.verified).count()
    }

    pub fn retweet_graph(&self) -> &DirectedWeightedGraph {
        &self.retweets
    }

    pub fn url_count(&self) -> usize {
        self.urls.len()
    }

    /// Canonical URLs in first-appearance order.
    pub fn urls(&self) -> impl Iterator<Item = (&str, &UrlEntry)> + '_ {
        self.urls.iter().map(|(u, e)| (u.as_str(), e))
    }

    pub fn url(&self, index: usize) -> (&str, &UrlEntry) {
        let (u, e) = self.urls.get_index(index).expect("url index in range");
        (u.as_str(), e)
    }

    pub fn url_index(&self, url: &str) -> Option<usize> {
        self.urls.get_index_of(url)
    }

    pub fn shares(&self) -> &[Share] {
        &self.shares
    }

    /// Original tweets (not retweets).
    pub fn tweet_count(&self) -> usize {
        self.records
            .iter()
            .filter(|r| r.retweet_of_user.is_none())
            .count()
    }

    pub fn retweet_count(&self) -> usize {
        self.records.len() - self.tweet_count()
    }

    /// Annotates every URL with its domain's label.
    pub fn join_labels(&mut self, table: &TrustLabelTable) {
        for entry in self.urls.values_mut() {
            entry.label = entry
                .domain
                .as_deref()
                .map_or(TrustLabel::Unclassified, |d| table.get(d));
        }
    }

    pub fn write_jsonl<W: Write>(&self, mut writer: W) -> Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut writer, r)?;
            writer.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn write_snapshot<W: Write>(&self, mut writer: W) -> Result<()> {
        writer.write_all(SNAPSHOT_MAGIC)?;
        bincode::serialize_into(writer, self)?;
        Ok(())
    }

    pub fn read_snapshot<R: Read>(mut reader: R) -> Result<Self> {
        let mut magic = [0u8; SNAPSHOT_MAGIC.len()];
        reader.read_exact(&mut magic)?;
        if magic != *SNAPSHOT_MAGIC {
            return Err(Error::InvalidArgument("not a dataset snapshot".into()));
        }
        Ok(bincode::deserialize_from(reader)?)
    }
}

/// Copy of `dataset` with URL labels from `table`.
pub fn join_labels(dataset: &Dataset, table: &TrustLabelTable) -> Dataset {
    let mut out = dataset.clone();
    out.join_labels(table);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::url::StaticResolver;
    use proptest::prelude::*;

    const FIXTURE: &str = r#"{"tweet_id":"1","user_id":"alice","verified":true,"urls":["https://www.news.com/a?utm_source=tw"],"timestamp":"2020-03-01T10:00:00Z"}
{"tweet_id":"2","user_id":"bob","verified":false,"retweet_of_user":"alice","urls":["https://www.news.com/a"],"timestamp":"2020-03-01T10:05:00Z"}
{"tweet_id":"3","user_id":"carol","verified":false,"timestamp":"2020-03-01T11:00:00+01:00"}
"#;

    fn parse(text: &str) -> Result<Dataset> {
        parse_tweets(text.as_bytes(), &IngestOptions::default())
    }

    #[test]
    fn three_line_fixture() {
        let d = parse(FIXTURE).unwrap();
        assert_eq!(d.user_count(), 3);
        assert_eq!(d.verified_count(), 1);
        assert_eq!(
            d.retweet_graph().edges().collect::<Vec<_>>(),
            vec![(1, 0, 1)]
        );
        assert_eq!(d.url_count(), 1);
        assert_eq!(d.url(0).0, "https://www.news.com/a");
        assert_eq!(d.url(0).1.domain.as_deref(), Some("news.com"));
        assert_eq!(d.shares().len(), 2);
        assert_eq!((d.tweet_count(), d.retweet_count()), (2, 1));
        let bob = d.user("bob").unwrap();
        assert_eq!(
            (bob.tweets, bob.retweets, bob.retweets_with_urls),
            (0, 1, 1)
        );
    }

    #[test]
    fn duplicates_and_malformed_lines() {
        let text = format!(
            "{FIXTURE}{}\nnot json\n{}\n",
            r#"{"tweet_id":"1","user_id":"zed","verified":false,"timestamp":"2020-03-01T10:00:00Z"}"#,
            r#"{"tweet_id":"9","user_id":"x","verified":false,"retweet_of_user":"x","timestamp":"2020-03-01T10:00:00Z"}"#
        );
        let d = parse(&text).unwrap();
        assert_eq!(d.stats().duplicates, 1);
        assert_eq!(d.stats().malformed, 2);
        assert_eq!(d.stats().records, 3);
        assert!(d.user("zed").is_none());
        let strict = parse_tweets(
            text.as_bytes(),
            &IngestOptions {
                strict: true,
                ..Default::default()
            },
        );
        assert!(matches!(strict, Err(Error::Parse { line: 5, .. })));
    }

    #[test]
    fn no_records_is_an_error() {
        assert!(matches!(parse("\n\ngarbage\n"), Err(Error::NoRecords)));
    }

    #[test]
    fn retweet_targets_become_users() {
        let text = r#"{"tweet_id":"1","user_id":"a","verified":false,"retweet_of_user":"ghost","timestamp":"2020-03-01T10:00:00Z"}"#;
        let d = parse(text).unwrap();
        assert_eq!(d.user_count(), 2);
        assert!(!d.user("ghost").unwrap().verified);
    }

    #[test]
    fn short_links_are_resolved() {
        let mut map = StaticResolver::new();
        map.insert("bit.ly/q", "https://www.news.com/a").unwrap();
        let text = r#"{"tweet_id":"1","user_id":"a","verified":false,"urls":["https://bit.ly/q","https://www.news.com/a","nonsense"],"timestamp":"2020-03-01T10:00:00Z"}"#;
        let opts = IngestOptions {
            strict: false,
            canonicalizer: Canonicalizer::new(Box::new(map)),
        };
        let d = parse_tweets(text.as_bytes(), &opts).unwrap();
        assert_eq!(d.url_count(), 1);
        assert_eq!(d.shares().len(), 2);
        assert_eq!(d.stats().invalid_urls, 1);
    }

    #[test]
    fn labels_join_by_domain() {
        let mut d = parse(FIXTURE).unwrap();
        let mut t = TrustLabelTable::new();
        t.insert("news.com", TrustLabel::NotTrustworthy);
        d.join_labels(&t);
        assert_eq!(d.url(0).1.label, TrustLabel::NotTrustworthy);
        d.join_labels(&TrustLabelTable::new());
        assert_eq!(d.url(0).1.label, TrustLabel::Unclassified);
    }

    #[test]
    fn snapshot_round_trip() {
        let d = parse(FIXTURE).unwrap();
        let mut buf = Vec::new();
        d.write_snapshot(&mut buf).unwrap();
        assert_eq!(Dataset::read_snapshot(&buf[..]).unwrap(), d);
    }

    fn record_strategy() -> impl Strategy<Value = TweetRecord> {
        (
            0usize..6,
            any::<bool>(),
            proptest::option::of(0usize..6),
            proptest::collection::vec(("(a|b|c)\\.(com|org)", 0u8..4), 0..3),
            0u32..100_000,
        )
            .prop_map(|(u, verified, rt, urls, t)| TweetRecord {
                tweet_id: String::new(),
                user_id: format!("u{u}"),
                verified,
                retweet_of_user: rt.filter(|&r| r != u).map(|r| format!("u{r}")),
                urls: urls
                    .into_iter()
                    .map(|(h, p)| format!("https://{h}/{p}"))
                    .collect(),
                timestamp: chrono::DateTime::from_timestamp(1_580_000_000 + t as i64, 0)
                    .unwrap()
                    .to_rfc3339(),
            })
    }

    proptest! {
        #[test]
        fn jsonl_round_trip(records in proptest::collection::vec(record_strategy(), 1..30)) {
            let records: Vec<TweetRecord> = records
                .into_iter()
                .enumerate()
                .map(|(i, mut r)| { r.tweet_id = i.to_string(); r })
                .collect();
            let d = Dataset::from_records(records, &Canonicalizer::default()).unwrap();
            let mut buf = Vec::new();
            d.write_jsonl(&mut buf).unwrap();
            let back = parse_tweets(&buf[..], &IngestOptions::default()).unwrap();
            prop_assert_eq!(back, d);
        }
    }
}
