//! Raw patient-sharing records and the rules for turning them into networks.

use alloc::{
    borrow::ToOwned,
    collections::{BTreeMap, BTreeSet},
    string::{String, ToString},
    vec::Vec,
};
use core::{fmt, str::FromStr};

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Opaque provider identifier (an NPI in the claims data).
///
/// Identifiers are compared as strings; no check-digit validation is done.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(transparent))]
pub struct ProviderId(String);

impl ProviderId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ProviderId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ProviderId {
    fn from(s: &str) -> Self {
        Self(s.to_owned())
    }
}

impl From<String> for ProviderId {
    fn from(s: String) -> Self {
        Self(s)
    }
}

impl AsRef<str> for ProviderId {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

/// One network per hospital service area and calendar year.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct NetworkKey {
    pub hsa: String,
    pub year: i32,
}

impl NetworkKey {
    pub fn new(hsa: impl Into<String>, year: i32) -> Self {
        Self {
            hsa: hsa.into(),
            year,
        }
    }
}

impl fmt::Display for NetworkKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.hsa, self.year)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct EdgeRecord {
    pub provider_a: ProviderId,
    pub provider_b: ProviderId,
    pub shared_patients: u64,
    pub hsa_id: String,
    pub year: i32,
}

/// Why a raw row did not become an [`EdgeRecord`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RejectReason {
    /// Missing fields, or a count/year that is not an integer.
    Malformed,
    /// Empty provider id or region id.
    MalformedId,
    SelfLoop,
    NegativeCount,
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Malformed => "malformed row",
            Self::MalformedId => "malformed id",
            Self::SelfLoop => "self-loop",
            Self::NegativeCount => "negative count",
        })
    }
}

impl EdgeRecord {
    pub fn new(
        provider_a: impl Into<ProviderId>,
        provider_b: impl Into<ProviderId>,
        shared_patients: u64,
        hsa_id: impl Into<String>,
        year: i32,
    ) -> Self {
        Self {
            provider_a: provider_a.into(),
            provider_b: provider_b.into(),
            shared_patients,
            hsa_id: hsa_id.into(),
            year,
        }
    }

    /// Validates one row given as text fields. Surrounding whitespace is ignored.
    pub fn from_fields(
        provider_a: &str,
        provider_b: &str,
        shared_patients: &str,
        hsa: &str,
        year: &str,
    ) -> Result<Self, RejectReason> {
        let (a, b, hsa) = (provider_a.trim(), provider_b.trim(), hsa.trim());
        let shared: i64 = shared_patients
            .trim()
            .parse()
            .map_err(|_| RejectReason::Malformed)?;
        let year: i32 = year.trim().parse().map_err(|_| RejectReason::Malformed)?;
        if a.is_empty() || b.is_empty() || hsa.is_empty() {
            return Err(RejectReason::MalformedId);
        }
        if a == b {
            return Err(RejectReason::SelfLoop);
        }
        if shared < 0 {
            return Err(RejectReason::NegativeCount);
        }
        Ok(Self::new(a, b, shared as u64, hsa, year))
    }

    pub fn key(&self) -> NetworkKey {
        NetworkKey::new(self.hsa_id.clone(), self.year)
    }
}

/// Row accounting for one parse run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ParseStats {
    pub rows_read: u64,
    pub accepted: u64,
    pub malformed: u64,
    pub malformed_ids: u64,
    pub self_loops: u64,
    pub negative_counts: u64,
}

impl ParseStats {
    pub fn record<T>(&mut self, outcome: &Result<T, RejectReason>) {
        self.rows_read += 1;
        match outcome {
            Ok(_) => self.accepted += 1,
            Err(reason) => self.reject(*reason),
        }
    }

    fn reject(&mut self, reason: RejectReason) {
        match reason {
            RejectReason::Malformed => self.malformed += 1,
            RejectReason::MalformedId => self.malformed_ids += 1,
            RejectReason::SelfLoop => self.self_loops += 1,
            RejectReason::NegativeCount => self.negative_counts += 1,
        }
    }

    pub fn rejected(&self) -> u64 {
        self.malformed + self.malformed_ids + self.self_loops + self.negative_counts
    }

    pub fn merge(&mut self, other: &ParseStats) {
        self.rows_read += other.rows_read;
        self.accepted += other.accepted;
        self.malformed += other.malformed;
        self.malformed_ids += other.malformed_ids;
        self.self_loops += other.self_loops;
        self.negative_counts += other.negative_counts;
    }
}

/// How the counts of `(a, b)` and `(b, a)` combine into one undirected weight.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
#[cfg_attr(
    feature = "serde",
    derive(Serialize, Deserialize),
    serde(rename_all = "lowercase")
)]
pub enum Symmetrization {
    #[default]
    Sum,
    Max,
}

impl Symmetrization {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Sum => "sum",
            Self::Max => "max",
        }
    }

    fn combine(&self, forward: u64, backward: u64) -> u64 {
        match self {
            Self::Sum => forward.saturating_add(backward),
            Self::Max => forward.max(backward),
        }
    }
}

impl FromStr for Symmetrization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sum" => Ok(Self::Sum),
            "max" => Ok(Self::Max),
            other => Err(Error::InvalidConfig(alloc::format!(
                "unknown symmetrization `{other}` (expected sum or max)"
            ))),
        }
    }
}

impl fmt::Display for Symmetrization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Edges below this many shared patients are never published.
pub const PRIVACY_MIN_SHARED_PATIENTS: u64 = 11;

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct FilterConfig {
    pub min_shared_patients: u64,
    pub excluded_providers: BTreeSet<ProviderId>,
    pub symmetrization: Symmetrization,
    /// Keep providers whose only records fall below the threshold.
    pub keep_isolated: bool,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            min_shared_patients: PRIVACY_MIN_SHARED_PATIENTS,
            excluded_providers: BTreeSet::new(),
            symmetrization: Symmetrization::Sum,
            keep_isolated: false,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_shared_patients < 1 {
            return Err(Error::InvalidConfig(
                "min_shared_patients must be at least 1".to_string(),
            ));
        }
        Ok(())
    }

    pub fn is_excluded(&self, id: &ProviderId) -> bool {
        self.excluded_providers.contains(id)
    }
}

/// Splits records into one bucket per `(hsa, year)`. Record order within a
/// bucket follows input order.
pub fn partition<I>(records: I) -> BTreeMap<NetworkKey, Vec<EdgeRecord>>
where
    I: IntoIterator<Item = EdgeRecord>,
{
    let mut buckets: BTreeMap<NetworkKey, Vec<EdgeRecord>> = BTreeMap::new();
    for record in records {
        buckets.entry(record.key()).or_default().push(record);
    }
    buckets
}

/// Aggregates records into undirected pair weights.
///
/// Identical ordered pairs are summed first, then the two directions are
/// combined with `symmetrization`. Keys are `(lo, hi)` with `lo < hi`.
pub(crate) fn aggregate_pairs<'a, I>(
    records: I,
    symmetrization: Symmetrization,
) -> BTreeMap<(&'a ProviderId, &'a ProviderId), u64>
where
    I: IntoIterator<Item = &'a EdgeRecord>,
{
    let mut directed: BTreeMap<(&ProviderId, &ProviderId), (u64, u64)> = BTreeMap::new();
    for r in records {
        let (a, b) = (&r.provider_a, &r.provider_b);
        if a < b {
            let e = directed.entry((a, b)).or_default();
            e.0 = e.0.saturating_add(r.shared_patients);
        } else {
            let e = directed.entry((b, a)).or_default();
            e.1 = e.1.saturating_add(r.shared_patients);
        }
    }
    directed
        .into_iter()
        .map(|(pair, (fwd, bwd))| (pair, symmetrization.combine(fwd, bwd)))
        .collect()
}
