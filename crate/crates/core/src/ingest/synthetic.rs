use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dataset::{Dataset, TweetRecord};
use super::labels::{TrustLabel, TrustLabelTable};
use super::url::{Canonicalizer, StaticResolver};
use crate::error::{Error, Result};

/// A planted group of unverified users who co-share a private URL pool and
/// retweet one another.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChamberSpec {
    pub camp: usize,
    pub size: usize,
    /// Probability that a member retweets another member (per ordered pair).
    pub internal_retweet_prob: f64,
    pub url_pool: usize,
    /// Extra co-sharing users that never retweet other members.
    pub nec_only: usize,
}

impl ChamberSpec {
    pub fn new(camp: usize, size: usize) -> Self {
        ChamberSpec {
            camp,
            size,
            internal_retweet_prob: 0.3,
            url_pool: 10,
            nec_only: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub camps: usize,
    pub verified_per_camp: usize,
    pub unverified_per_camp: usize,
    pub chambers: Vec<ChamberSpec>,
    /// Probability that an unverified user retweets a given verified user of
    /// its camp.
    pub hub_retweet_prob: f64,
    /// Retweets of random same-camp unverified users, per unverified user.
    pub background_retweets: usize,
    /// Fraction of retweets redirected to a user of another camp.
    pub cross_camp_rate: f64,
    /// Probability that a chamber member shares a given pool URL.
    pub chamber_share_prob: f64,
    pub noise_urls: usize,
    /// Random-URL tweets per user.
    pub noise_shares: usize,
    /// Tweets without URLs per user.
    pub plain_tweets: usize,
    pub domains: usize,
    /// Among labeled ordinary domains, the fraction tagged N.
    pub untrustworthy_fraction: f64,
    /// Ordinary domains left out of the label table.
    pub unlabeled_fraction: f64,
    /// Probability that a chamber pool URL comes from an N domain.
    pub chamber_untrustworthy_bias: f64,
    /// Shares emitted as shortener links (resolved through the URL map).
    pub short_link_rate: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            camps: 2,
            verified_per_camp: 4,
            unverified_per_camp: 100,
            chambers: Vec::new(),
            hub_retweet_prob: 0.8,
            background_retweets: 2,
            cross_camp_rate: 0.01,
            chamber_share_prob: 0.8,
            noise_urls: 600,
            noise_shares: 6,
            plain_tweets: 1,
            domains: 40,
            untrustworthy_fraction: 0.3,
            unlabeled_fraction: 0.2,
            chamber_untrustworthy_bias: 0.8,
            short_link_rate: 0.1,
            seed: 0,
        }
    }
}

impl SyntheticConfig {
    /// Two camps with one chamber of `size` users each.
    pub fn two_chambers(size: usize, seed: u64) -> Self {
        SyntheticConfig {
            unverified_per_camp: 100.max(3 * size),
            chambers: vec![ChamberSpec::new(0, size), ChamberSpec::new(1, size)],
            seed,
            ..Self::default()
        }
    }

    fn check(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.camps == 0 {
            return bad("synthetic config needs at least one camp".into());
        }
        let probs = [
            ("hub_retweet_prob", self.hub_retweet_prob),
            ("cross_camp_rate", self.cross_camp_rate),
            ("chamber_share_prob", self.chamber_share_prob),
            ("untrustworthy_fraction", self.untrustworthy_fraction),
            ("unlabeled_fraction", self.unlabeled_fraction),
            (
                "chamber_untrustworthy_bias",
                self.chamber_untrustworthy_bias,
            ),
            ("short_link_rate", self.short_link_rate),
        ];
        for (name, p) in probs {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} = {p} is not a probability"));
            }
        }
        let mut used = vec![0usize; self.camps];
        for c in &self.chambers {
            if c.camp >= self.camps {
                return bad(format!("chamber camp {} out of range", c.camp));
            }
            if !(0.0..=1.0).contains(&c.internal_retweet_prob) {
                return bad("internal_retweet_prob is not a probability".into());
            }
            used[c.camp] += c.size + c.nec_only;
        }
        if used.iter().any(|&u| u > self.unverified_per_camp) {
            return bad("chambers exceed the unverified users of their camp".into());
        }
        if self.domains == 0 && (self.noise_urls > 0 || !self.chambers.is_empty()) {
            return bad("URLs need at least one domain".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlantedCamp {
    pub verified: Vec<String>,
    pub unverified: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlantedNec {
    pub camp: usize,
    pub members: Vec<String>,
    /// Canonical URLs of the private pool.
    pub urls: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlantedChamber {
    pub camp: usize,
    pub nec: usize,
    pub members: Vec<String>,
}

/// Ground truth of a generated corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticManifest {
    pub config: SyntheticConfig,
    pub camps: Vec<PlantedCamp>,
    pub necs: Vec<PlantedNec>,
    pub chambers: Vec<PlantedChamber>,
    pub records: usize,
}

impl SyntheticManifest {
    pub fn chamber_users(&self) -> usize {
        self.chambers.iter().map(|c| c.members.len()).sum()
    }

    /// Checks chamber ⊆ NEC ⊆ camp for every planted group.
    pub fn is_consistent(&self) -> bool {
        let camp_members = |c: usize| -> BTreeSet<&String> {
            self.camps[c]
                .verified
                .iter()
                .chain(&self.camps[c].unverified)
                .collect()
        };
        self.necs
            .iter()
            .all(|n| n.members.iter().all(|m| camp_members(n.camp).contains(m)))
            && self.chambers.iter().all(|ch| {
                self.necs.get(ch.nec).is_some_and(|n| {
                    n.camp == ch.camp && ch.members.iter().all(|m| n.members.contains(m))
                })
            })
    }
}

pub struct SyntheticCorpus {
    /// Canonicalized through `url_map`, labels joined from `labels`.
    pub dataset: Dataset,
    pub manifest: SyntheticManifest,
    pub labels: TrustLabelTable,
    pub url_map: StaticResolver,
}

const SUFFIXES: &[&str] = &["com", "it", "co.uk", "org", "net"];

struct Event {
    user: String,
    retweet_of: Option<String>,
    url: Option<usize>,
}

/// Generates a labeled corpus with planted camps, co-sharing groups and
/// chambers.
pub fn generate_synthetic(config: &SyntheticConfig) -> Result<SyntheticCorpus> {
    config.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    // domains: ordinary outlets plus one platform and one satire site
    let mut labels = TrustLabelTable::new();
    let mut trusted = Vec::new();
    let mut untrusted = Vec::new();
    let mut domains = Vec::new();
    for d in 0..config.domains {
        let name = format!("outlet{d}.{}", SUFFIXES[d % SUFFIXES.len()]);
        if rng.gen_bool(config.unlabeled_fraction) {
            trusted.push(domains.len());
        } else if rng.gen_bool(config.untrustworthy_fraction) {
            labels.insert(&name, TrustLabel::NotTrustworthy);
            untrusted.push(domains.len());
        } else {
            labels.insert(&name, TrustLabel::Trustworthy);
            trusted.push(domains.len());
        }
        domains.push(name);
    }
    if config.domains > 0 {
        for (name, label) in [
            ("socialsite.com", TrustLabel::Platform),
            ("jokes.it", TrustLabel::Satire),
        ] {
            labels.insert(name, label);
            trusted.push(domains.len());
            domains.push(name.to_string());
        }
    }
    if untrusted.is_empty() {
        untrusted = trusted.clone();
    }

    let mut urls: Vec<String> = (0..config.noise_urls)
        .map(|k| {
            format!(
                "https://www.{}/story/{k}",
                domains[rng.gen_range(0..domains.len())]
            )
        })
        .collect();

    let mut camps = Vec::with_capacity(config.camps);
    for c in 0..config.camps {
        camps.push(PlantedCamp {
            verified: (0..config.verified_per_camp)
                .map(|k| format!("v{c}_{k}"))
                .collect(),
            unverified: (0..config.unverified_per_camp)
                .map(|k| format!("u{c}_{k}"))
                .collect(),
        });
    }

    let mut necs = Vec::new();
    let mut chambers = Vec::new();
    let mut free: Vec<Vec<String>> = camps
        .iter()
        .map(|c| {
            let mut v = c.unverified.clone();
            v.shuffle(&mut rng);
            v
        })
        .collect();
    let mut chamber_pools = Vec::new();
    for (ci, spec) in config.chambers.iter().enumerate() {
        let members: Vec<String> = free[spec.camp].drain(..spec.size).collect();
        let extra: Vec<String> = free[spec.camp].drain(..spec.nec_only).collect();
        let first = urls.len();
        for k in 0..spec.url_pool {
            let pool = if rng.gen_bool(config.chamber_untrustworthy_bias) {
                &untrusted
            } else {
                &trusted
            };
            let d = pool[rng.gen_range(0..pool.len())];
            urls.push(format!("https://{}/c{ci}/item{k}", domains[d]));
        }
        chamber_pools.push(first..urls.len());
        let mut all: Vec<String> = members.iter().chain(&extra).cloned().collect();
        all.sort();
        necs.push(PlantedNec {
            camp: spec.camp,
            members: all,
            urls: urls[first..].to_vec(),
        });
        let mut members = members;
        members.sort();
        chambers.push(PlantedChamber {
            camp: spec.camp,
            nec: ci,
            members,
        });
    }

    let mut events: Vec<Event> = Vec::new();
    let tweet = |user: &str, url: Option<usize>| Event {
        user: user.to_string(),
        retweet_of: None,
        url,
    };
    let retweet =
        |rng: &mut ChaCha8Rng, user: &str, camp: usize, target: &str, verified_target: bool| {
            let target = if config.camps > 1 && rng.gen_bool(config.cross_camp_rate) {
                let other = (camp + rng.gen_range(1..config.camps)) % config.camps;
                let pool = if verified_target && !camps[other].verified.is_empty() {
                    &camps[other].verified
                } else {
                    &camps[other].unverified
                };
                pool.choose(rng).cloned()
            } else {
                Some(target.to_string())
            };
            target.filter(|t| t != user).map(|t| Event {
                user: user.to_string(),
                retweet_of: Some(t),
                url: None,
            })
        };

    for (c, camp) in camps.iter().enumerate() {
        for user in camp.verified.iter().chain(&camp.unverified) {
            for _ in 0..config.plain_tweets {
                events.push(tweet(user, None));
            }
            for _ in 0..if config.noise_urls > 0 {
                config.noise_shares
            } else {
                0
            } {
                events.push(tweet(user, Some(rng.gen_range(0..config.noise_urls))));
            }
        }
        for u in &camp.unverified {
            for v in &camp.verified {
                if rng.gen_bool(config.hub_retweet_prob) {
                    for _ in 0..rng.gen_range(1..=2) {
                        events.extend(retweet(&mut rng, u, c, v, true));
                    }
                }
            }
            if camp.unverified.len() > 1 {
                for _ in 0..config.background_retweets {
                    let t = camp
                        .unverified
                        .choose(&mut rng)
                        .expect("non-empty camp")
                        .clone();
                    events.extend(retweet(&mut rng, u, c, &t, false));
                }
            }
        }
    }
    for (ci, spec) in config.chambers.iter().enumerate() {
        for m in &necs[ci].members {
            for url in chamber_pools[ci].clone() {
                if rng.gen_bool(config.chamber_share_prob) {
                    events.push(tweet(m, Some(url)));
                }
            }
        }
        let members = &chambers[ci].members;
        for a in members {
            for b in members {
                if a != b && rng.gen_bool(spec.internal_retweet_prob) {
                    events.push(Event {
                        user: a.clone(),
                        retweet_of: Some(b.clone()),
                        url: None,
                    });
                }
            }
        }
    }
    events.shuffle(&mut rng);

    let verified: BTreeSet<&String> = camps.iter().flat_map(|c| &c.verified).collect();
    let mut url_map = StaticResolver::new();
    let start = chrono::DateTime::from_timestamp(1_577_836_800, 0).expect("valid epoch");
    let mut records = Vec::with_capacity(events.len());
    for (i, e) in events.into_iter().enumerate() {
        let urls_out = match e.url {
            Some(k) => {
                let r: f64 = rng.gen();
                let raw = if r < config.short_link_rate {
                    let short = format!("bit.ly/s{k:x}");
                    url_map.insert(&short, &urls[k])?;
                    format!("https://{short}")
                } else if r < config.short_link_rate + 0.1 {
                    format!("{}?utm_source=twitter&utm_medium=social", urls[k])
                } else {
                    urls[k].clone()
                };
                vec![raw]
            }
            None => Vec::new(),
        };
        let ts = start + chrono::Duration::seconds(37 * i as i64);
        records.push(TweetRecord {
            tweet_id: format!("t{i}"),
            verified: verified.contains(&e.user),
            user_id: e.user,
            retweet_of_user: e.retweet_of,
            urls: urls_out,
            timestamp: ts.to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        });
    }

    let manifest = SyntheticManifest {
        config: config.clone(),
        camps,
        necs,
        chambers,
        records: records.len(),
    };
    let mut dataset =
        Dataset::from_records(records, &Canonicalizer::new(Box::new(url_map.clone())))?;
    dataset.join_labels(&labels);
    Ok(SyntheticCorpus {
        dataset,
        manifest,
        labels,
        url_map,
    })
}
