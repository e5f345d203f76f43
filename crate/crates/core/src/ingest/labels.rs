use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Domain trust tag.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default,
)]
pub enum TrustLabel {
    #[serde(rename = "T")]
    Trustworthy,
    #[serde(rename = "N")]
    NotTrustworthy,
    /// Social platform.
    #[serde(rename = "P")]
    Platform,
    #[serde(rename = "S")]
    Satire,
    #[default]
    #[serde(rename = "UNC")]
    Unclassified,
}

impl TrustLabel {
    pub const ALL: [TrustLabel; 5] = [
        TrustLabel::Trustworthy,
        TrustLabel::NotTrustworthy,
        TrustLabel::Platform,
        TrustLabel::Satire,
        TrustLabel::Unclassified,
    ];

    /// Platform and satire sources stay out of trust statistics.
    pub fn counts_for_trust(self) -> bool {
        !matches!(self, TrustLabel::Platform | TrustLabel::Satire)
    }

    pub fn code(self) -> &'static str {
        match self {
            TrustLabel::Trustworthy => "T",
            TrustLabel::NotTrustworthy => "N",
            TrustLabel::Platform => "P",
            TrustLabel::Satire => "S",
            TrustLabel::Unclassified => "UNC",
        }
    }
}

impl fmt::Display for TrustLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for TrustLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TrustLabel::ALL
            .into_iter()
            .find(|l| l.code().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown trust label {s:?}")))
    }
}

/// Domain → label table. Lookups of absent domains give `UNC`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrustLabelTable {
    labels: BTreeMap<String, TrustLabel>,
}

impl TrustLabelTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, domain: &str, label: TrustLabel) {
        self.labels
            .insert(domain.trim().to_ascii_lowercase(), label);
    }

    pub fn get(&self, domain: &str) -> TrustLabel {
        self.labels
            .get(&domain.to_ascii_lowercase())
            .copied()
            .unwrap_or_default()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, TrustLabel)> + '_ {
        self.labels.iter().map(|(d, l)| (d.as_str(), *l))
    }

    /// Reads CSV with header `domain,label`.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut table = Self::new();
        let mut rdr = csv::Reader::from_reader(reader);
        for (n, row) in rdr.records().enumerate() {
            let row = row?;
            let (Some(domain), Some(label)) = (row.get(0), row.get(1)) else {
                return Err(Error::Parse {
                    line: n + 2,
                    message: "expected domain,label".into(),
                });
            };
            let label = label.parse().map_err(|e: Error| Error::Parse {
                line: n + 2,
                message: e.to_string(),
            })?;
            table.insert(domain, label);
        }
        Ok(table)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["domain", "label"])?;
        for (d, l) in self.iter() {
            w.write_record([d, l.code()])?;
        }
        w.flush()?;
        Ok(())
    }
}
