//! Record ingestion, URL canonicalization, trust labels and the synthetic
//! corpus generator.

mod dataset;
mod labels;
mod synthetic;
mod url;

pub use dataset::{
    join_labels, parse_tweets, Dataset, IngestOptions, IngestStats, Share, TweetRecord, UrlEntry,
    User, SNAPSHOT_MAGIC,
};
pub use labels::{TrustLabel, TrustLabelTable};
pub use synthetic::{
    generate_synthetic, ChamberSpec, PlantedCamp, PlantedChamber, PlantedNec, SyntheticConfig,
    SyntheticCorpus, SyntheticManifest,
};
#[cfg(feature = "live-resolver")]
pub use url::HttpResolver;
pub use url::{
    canonicalize_url, extract_domain, CanonicalUrl, Canonicalizer, NoResolver, Resolver,
    StaticResolver, UrlFlag, DEFAULT_SHORTENERS, DEFAULT_TRACKING_PARAMS,
};
