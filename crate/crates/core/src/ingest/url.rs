use std::collections::{BTreeSet, HashMap, HashSet};
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use url::Url;

use crate::error::{Error, Result};

/// Follows one redirect hop. `None` means `url` is terminal.
pub trait Resolver: Send + Sync {
    fn resolve(&self, url: &str) -> Option<String>;
}

/// Resolver that knows no redirects; every URL is terminal.
#[derive(Debug, Default, Clone, Copy)]
pub struct NoResolver;

impl Resolver for NoResolver {
    fn resolve(&self, _url: &str) -> Option<String> {
        None
    }
}

/// Redirect table keyed by scheme-less URL (`bit.ly/x`). Targets without a
/// scheme are read as `https`.
#[derive(Debug, Default, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StaticResolver {
    map: HashMap<String, String>,
}

impl StaticResolver {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, from: &str, to: &str) -> Result<()> {
        let key = schemeless(&parse_lenient(from)?);
        self.map.insert(key, to.trim().to_string());
        Ok(())
    }

    /// Reads `short<TAB>long` lines; `#` starts a comment line.
    pub fn from_tsv<R: BufRead>(reader: R) -> Result<Self> {
        let mut out = Self::new();
        for (n, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (from, to) = line.split_once('\t').ok_or_else(|| Error::Parse {
                line: n + 1,
                message: "expected two tab-separated columns".into(),
            })?;
            out.insert(from, to)?;
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Entries sorted by key, as written by [`StaticResolver::write_tsv`].
    pub fn entries(&self) -> Vec<(&str, &str)> {
        let mut v: Vec<(&str, &str)> = self
            .map
            .iter()
            .map(|(k, v)| (k.as_str(), v.as_str()))
            .collect();
        v.sort();
        v
    }

    pub fn write_tsv<W: std::io::Write>(&self, mut writer: W) -> Result<()> {
        for (k, v) in self.entries() {
            writeln!(writer, "{k}\t{v}")?;
        }
        Ok(())
    }
}

impl Resolver for StaticResolver {
    fn resolve(&self, url: &str) -> Option<String> {
        let parsed = Url::parse(url).ok()?;
        self.map.get(&schemeless(&parsed)).cloned()
    }
}

/// Follows redirects over HTTP with HEAD requests.
#[cfg(feature = "live-resolver")]
pub struct HttpResolver {
    agent: ureq::Agent,
}

#[cfg(feature = "live-resolver")]
impl HttpResolver {
    pub fn new(timeout: std::time::Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .max_redirects(0)
            .max_redirects_will_error(false)
            .http_status_as_error(false)
            .timeout_global(Some(timeout))
            .build()
            .into();
        HttpResolver { agent }
    }
}

#[cfg(feature = "live-resolver")]
impl Resolver for HttpResolver {
    fn resolve(&self, url: &str) -> Option<String> {
        let resp = self.agent.head(url).call().ok()?;
        if !resp.status().is_redirection() {
            return None;
        }
        let location = resp.headers().get("location")?.to_str().ok()?;
        Url::parse(url).ok()?.join(location).ok().map(String::from)
    }
}

/// Why a URL kept its own (normalized) form instead of a resolved target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UrlFlag {
    /// Known shortener host with no redirect available.
    Unresolved,
    RedirectLoop,
    DepthExceeded,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CanonicalUrl {
    pub url: String,
    pub hops: usize,
    pub flag: Option<UrlFlag>,
}

pub const DEFAULT_TRACKING_PARAMS: &[&str] = &[
    "utm_*", "fbclid", "gclid", "dclid", "msclkid", "yclid", "igshid", "mc_cid", "mc_eid", "_ga",
    "ref_src", "ref_url", "s_cid", "cmpid",
];

pub const DEFAULT_SHORTENERS: &[&str] = &[
    "bit.ly",
    "t.co",
    "tinyurl.com",
    "goo.gl",
    "ow.ly",
    "buff.ly",
    "dlvr.it",
    "is.gd",
    "fb.me",
    "ift.tt",
    "trib.al",
    "amzn.to",
    "youtu.be",
    "tiny.cc",
    "shorturl.at",
    "rb.gy",
    "cutt.ly",
];

/// Settings for [`canonicalize_url`]. Tracking entries ending in `*` match by
/// prefix.
pub struct Canonicalizer {
    resolver: Box<dyn Resolver>,
    pub max_depth: usize,
    pub tracking_params: Vec<String>,
    pub shortener_hosts: BTreeSet<String>,
}

impl Default for Canonicalizer {
    fn default() -> Self {
        Canonicalizer::new(Box::new(NoResolver))
    }
}

impl Canonicalizer {
    pub fn new(resolver: Box<dyn Resolver>) -> Self {
        Canonicalizer {
            resolver,
            max_depth: 10,
            tracking_params: DEFAULT_TRACKING_PARAMS
                .iter()
                .map(|s| s.to_string())
                .collect(),
            shortener_hosts: DEFAULT_SHORTENERS.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn is_tracking(&self, key: &str) -> bool {
        self.tracking_params
            .iter()
            .any(|p| match p.strip_suffix('*') {
                Some(prefix) => key.starts_with(prefix),
                None => key == p,
            })
    }

    /// Lowercased scheme and host (done by the parser) with tracking
    /// parameters removed.
    fn normalize(&self, mut url: Url) -> Url {
        if url.query_pairs().any(|(k, _)| self.is_tracking(&k)) {
            let kept: Vec<(String, String)> = url
                .query_pairs()
                .filter(|(k, _)| !self.is_tracking(k))
                .map(|(k, v)| (k.into_owned(), v.into_owned()))
                .collect();
            if kept.is_empty() {
                url.set_query(None);
            } else {
                url.query_pairs_mut().clear().extend_pairs(kept);
            }
        }
        url
    }
}

/// Resolves `raw` to its terminal long form.
///
/// Redirect loops and chains longer than `max_depth` are flagged and keep the
/// normalized input, as do shortener links the resolver cannot expand.
pub fn canonicalize_url(raw: &str, canon: &Canonicalizer) -> Result<CanonicalUrl> {
    let parsed = Url::parse(raw.trim()).map_err(|e| Error::InvalidUrl {
        url: raw.to_string(),
        reason: e.to_string(),
    })?;
    if !matches!(parsed.scheme(), "http" | "https") || parsed.host_str().is_none() {
        return Err(Error::InvalidUrl {
            url: raw.to_string(),
            reason: "not an http(s) URL".into(),
        });
    }
    let start = canon.normalize(parsed);
    let mut current = start.clone();
    let mut seen: HashSet<String> = HashSet::from([schemeless(&current)]);
    let mut hops = 0;
    while let Some(next) = canon.resolver.resolve(current.as_str()) {
        let flag = if hops == canon.max_depth {
            Some(UrlFlag::DepthExceeded)
        } else {
            let next = canon.normalize(parse_lenient(&next)?);
            if seen.insert(schemeless(&next)) {
                current = next;
                hops += 1;
                continue;
            }
            Some(UrlFlag::RedirectLoop)
        };
        return Ok(CanonicalUrl {
            url: start.into(),
            hops: 0,
            flag,
        });
    }
    let flag = (hops == 0
        && current
            .host_str()
            .is_some_and(|h| canon.shortener_hosts.contains(h)))
    .then_some(UrlFlag::Unresolved);
    Ok(CanonicalUrl {
        url: current.into(),
        hops,
        flag,
    })
}

/// Registrable domain (one label left of the public suffix) of an http(s)
/// URL.
pub fn extract_domain(url: &str) -> Result<String> {
    let invalid = |reason: &str| Error::InvalidUrl {
        url: url.to_string(),
        reason: reason.to_string(),
    };
    let parsed = Url::parse(url).map_err(|e| invalid(&e.to_string()))?;
    if !matches!(parsed.scheme(), "http" | "https") {
        return Err(invalid("not an http(s) URL"));
    }
    let host = match parsed.host() {
        Some(url::Host::Domain(h)) => h,
        Some(_) => return Err(invalid("IP address host")),
        None => return Err(invalid("missing host")),
    };
    let host = host.trim_end_matches('.');
    psl::domain_str(host)
        .map(str::to_string)
        .ok_or_else(|| invalid("no registrable domain"))
}

fn parse_lenient(raw: &str) -> Result<Url> {
    let raw = raw.trim();
    let attempt = if raw.contains("://") {
        Url::parse(raw)
    } else {
        Url::parse(&format!("https://{raw}"))
    };
    let url = attempt.map_err(|e| Error::InvalidUrl {
        url: raw.to_string(),
        reason: e.to_string(),
    })?;
    if !matches!(url.scheme(), "http" | "https") || url.host_str().is_none() {
        return Err(Error::InvalidUrl {
            url: raw.to_string(),
            reason: "not an http(s) URL".into(),
        });
    }
    Ok(url)
}

/// Host, port, path and query without the scheme; a bare `/` path is dropped.
fn schemeless(url: &Url) -> String {
    let mut s = url.host_str().unwrap_or_default().to_string();
    if let Some(port) = url.port() {
        s.push_str(&format!(":{port}"));
    }
    if url.path() != "/" {
        s.push_str(url.path());
    }
    if let Some(q) = url.query() {
        s.push('?');
        s.push_str(q);
    }
    s
}
