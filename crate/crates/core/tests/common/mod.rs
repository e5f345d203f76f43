#![allow(dead_code)]

use echodet::ingest::{Canonicalizer, Dataset, TrustLabel, TrustLabelTable, TweetRecord};

/// Builds records with fresh ids and increasing timestamps.
#[derive(Default)]
pub struct Records {
    out: Vec<TweetRecord>,
}

impl Records {
    pub fn new() -> Self {
        Self::default()
    }

    fn push(
        &mut self,
        user: &str,
        verified: bool,
        retweet_of: Option<&str>,
        urls: &[&str],
    ) -> &mut Self {
        let n = self.out.len();
        self.out.push(TweetRecord {
            tweet_id: format!("t{n}"),
            user_id: user.to_string(),
            verified,
            retweet_of_user: retweet_of.map(str::to_string),
            urls: urls.iter().map(|u| u.to_string()).collect(),
            timestamp: format!(
                "2021-03-{:02}T{:02}:{:02}:00Z",
                1 + n / 1440 % 28,
                n / 60 % 24,
                n % 60
            ),
        });
        self
    }

    pub fn tweet(&mut self, user: &str, urls: &[&str]) -> &mut Self {
        self.push(user, false, None, urls)
    }

    pub fn verified_tweet(&mut self, user: &str, urls: &[&str]) -> &mut Self {
        self.push(user, true, None, urls)
    }

    pub fn retweet(&mut self, user: &str, author: &str) -> &mut Self {
        self.push(user, false, Some(author), &[])
    }

    pub fn retweet_with(&mut self, user: &str, author: &str, urls: &[&str]) -> &mut Self {
        self.push(user, false, Some(author), urls)
    }

    pub fn dataset(&self) -> Dataset {
        Dataset::from_records(self.out.clone(), &Canonicalizer::default()).expect("valid fixture")
    }

    pub fn labeled(&self, labels: &[(&str, TrustLabel)]) -> Dataset {
        let mut table = TrustLabelTable::new();
        for (d, l) in labels {
            table.insert(d, *l);
        }
        let mut d = self.dataset();
        d.join_labels(&table);
        d
    }
}

/// F1 of a recovered member set against a planted one.
pub fn f1(found: &[String], planted: &[String]) -> f64 {
    let hits = found.iter().filter(|m| planted.contains(m)).count() as f64;
    if hits == 0.0 {
        return 0.0;
    }
    let precision = hits / found.len() as f64;
    let recall = hits / planted.len() as f64;
    2.0 * precision * recall / (precision + recall)
}
