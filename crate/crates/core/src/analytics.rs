//! Per-network feature tables and the analyses run over them.
//!
//! A [`Frame`] is a small typed table (text or numeric columns, cells may be
//! absent). Feature rows, metadata tables and joined analysis frames all use
//! it, which keeps export and the HTTP layer schema-agnostic.

use alloc::{
    collections::{BTreeMap, BTreeSet},
    format,
    string::{String, ToString},
    vec,
    vec::Vec,
};
use core::{fmt, str::FromStr};

use rand::{seq::SliceRandom, SeedableRng};
use rand_chacha::ChaCha8Rng;
#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::{
    curvature::{network_curvature_summary, CurvatureKind, CurvatureReport, CurvatureSummary},
    descriptors::{descriptor_row, descriptor_row_with_betweenness, DescriptorRow},
    error::{Error, Result},
    graph::Graph,
    record::NetworkKey,
    stats,
};

pub const HSA_COLUMN: &str = "hsa";
pub const YEAR_COLUMN: &str = "year";
pub const UNASSIGNED: &str = "unassigned";

const SUMMARY_FIELDS: [&str; 7] = ["mean", "median", "std", "min", "max", "frac_negative", "count"];

/// Column order of the `referral_network_features` table.
pub fn feature_columns() -> Vec<(String, ColumnType)> {
    let mut cols = vec![
        (HSA_COLUMN.to_string(), ColumnType::Text),
        (YEAR_COLUMN.to_string(), ColumnType::Numeric),
    ];
    for name in [
        "node_count",
        "edge_count",
        "density",
        "global_clustering",
        "mean_local_clustering",
        "degree_assortativity",
        "component_count",
        "largest_component_fraction",
        "mean_degree",
        "max_degree",
        "mean_degree_centrality",
        "max_degree_centrality",
        "mean_betweenness",
        "max_betweenness",
    ] {
        cols.push((name.to_string(), ColumnType::Numeric));
    }
    for kind in ["frc", "orc"] {
        for field in SUMMARY_FIELDS {
            cols.push((format!("{kind}_{field}"), ColumnType::Numeric));
        }
    }
    cols
}

/// One row of the feature table: descriptors plus curvature summaries.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct NetworkFeatures {
    pub key: NetworkKey,
    pub descriptors: DescriptorRow,
    pub frc: CurvatureSummary,
    pub orc: CurvatureSummary,
}

impl NetworkFeatures {
    pub fn new(g: &Graph, report: Option<&CurvatureReport>) -> Result<Self> {
        Self::from_parts(g, report, descriptor_row(g))
    }

    /// Like [`NetworkFeatures::new`] with betweenness computed by the caller.
    pub fn with_betweenness(g: &Graph, report: Option<&CurvatureReport>, betweenness: &[f64]) -> Result<Self> {
        Self::from_parts(g, report, descriptor_row_with_betweenness(g, betweenness))
    }

    fn from_parts(g: &Graph, report: Option<&CurvatureReport>, descriptors: DescriptorRow) -> Result<Self> {
        if let Some(r) = report {
            if &r.key != g.key() {
                return Err(Error::InvalidGraph(format!(
                    "report for {} attached to network {}",
                    r.key,
                    g.key()
                )));
            }
            r.check_against(g)?;
        }
        let summary = |kind| report.map(|r| network_curvature_summary(r, kind)).unwrap_or_default();
        Ok(Self {
            key: g.key().clone(),
            descriptors,
            frc: summary(CurvatureKind::Frc),
            orc: summary(CurvatureKind::Orc),
        })
    }

    /// Cells in [`feature_columns`] order.
    pub fn cells(&self) -> Vec<Cell> {
        let d = &self.descriptors;
        let mut row = vec![
            Cell::Text(self.key.hsa.clone()),
            Cell::Num(self.key.year as f64),
            Cell::Num(d.node_count as f64),
            Cell::Num(d.edge_count as f64),
            d.density.into(),
            d.global_clustering.into(),
            d.mean_local_clustering.into(),
            d.degree_assortativity.into(),
            Cell::Num(d.component_count as f64),
            d.largest_component_fraction.into(),
            d.mean_degree.into(),
            d.max_degree.into(),
            d.mean_degree_centrality.into(),
            d.max_degree_centrality.into(),
            d.mean_betweenness.into(),
            d.max_betweenness.into(),
        ];
        for s in [&self.frc, &self.orc] {
            row.extend([
                s.mean.into(),
                s.median.into(),
                s.std.into(),
                s.min.into(),
                s.max.into(),
                s.frac_negative.into(),
                Cell::Num(s.count as f64),
            ]);
        }
        row
    }
}

/// One feature row per network, sorted by key. Duplicate keys are an error.
pub fn assemble_features<'a, I>(networks: I) -> Result<Vec<NetworkFeatures>>
where
    I: IntoIterator<Item = (&'a Graph, Option<&'a CurvatureReport>)>,
{
    let mut rows = networks
        .into_iter()
        .map(|(g, r)| NetworkFeatures::new(g, r))
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| a.key.cmp(&b.key));
    check_unique_keys(&rows)?;
    Ok(rows)
}

pub fn check_unique_keys(rows: &[NetworkFeatures]) -> Result<()> {
    if let Some(w) = rows.windows(2).find(|w| w[0].key == w[1].key) {
        return Err(Error::DuplicateKey {
            table: TableName::FEATURES.to_string(),
            key: w[0].key.to_string(),
        });
    }
    Ok(())
}

pub fn features_frame(rows: &[NetworkFeatures]) -> Frame {
    let mut frame = Frame::new(feature_columns()).expect("feature columns are distinct");
    for r in rows {
        frame.push_row(r.cells()).expect("feature rows match their columns");
    }
    frame
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(
    feature = "serde",
    derive(Serialize, Deserialize),
    serde(rename_all = "lowercase")
)]
pub enum ColumnType {
    Numeric,
    Text,
}

impl ColumnType {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Numeric => "numeric",
            Self::Text => "text",
        }
    }
}

impl FromStr for ColumnType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "numeric" | "number" | "real" | "integer" => Ok(Self::Numeric),
            "text" | "string" => Ok(Self::Text),
            other => Err(Error::InvalidConfig(format!("unknown column type `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(untagged))]
pub enum Cell {
    Num(f64),
    Text(String),
    Absent,
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Self::Num(x) if x.is_finite() => Some(*x),
            _ => None,
        }
    }

    pub fn is_absent(&self) -> bool {
        matches!(self, Self::Absent)
    }

    /// Join/group label: text as-is (trimmed), integral numbers without a
    /// fractional part.
    pub fn label(&self) -> Option<String> {
        match self {
            Self::Text(s) => Some(s.trim().to_string()),
            Self::Num(x) if x.is_finite() && libm::trunc(*x) == *x && x.abs() < 1e15 => {
                Some(format!("{}", *x as i64))
            }
            Self::Num(x) => Some(format!("{x}")),
            Self::Absent => None,
        }
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Self::Absent, Self::Num)
    }
}

/// A typed, row-major table.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Frame {
    columns: Vec<(String, ColumnType)>,
    rows: Vec<Vec<Cell>>,
}

impl Frame {
    pub fn new(columns: Vec<(String, ColumnType)>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for (name, _) in &columns {
            if !seen.insert(name.as_str()) {
                return Err(Error::DuplicateColumn(name.clone()));
            }
        }
        Ok(Self {
            columns,
            rows: Vec::new(),
        })
    }

    pub fn push_row(&mut self, row: Vec<Cell>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::RowWidth {
                expected: self.columns.len(),
                found: row.len(),
            });
        }
        for (cell, (name, ty)) in row.iter().zip(&self.columns) {
            let ok = matches!(
                (cell, ty),
                (Cell::Absent, _) | (Cell::Num(_), ColumnType::Numeric) | (Cell::Text(_), ColumnType::Text)
            );
            if !ok {
                return Err(Error::InvalidConfig(format!(
                    "cell {cell:?} does not fit {} column `{name}`",
                    ty.as_str()
                )));
            }
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn columns(&self) -> &[(String, ColumnType)] {
        &self.columns
    }

    pub fn column_names(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().map(|(n, _)| n.as_str())
    }

    pub fn rows(&self) -> &[Vec<Cell>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.columns.iter().any(|(n, _)| n == name)
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|(n, _)| n == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    pub fn column_type(&self, name: &str) -> Result<ColumnType> {
        Ok(self.columns[self.column_index(name)?].1)
    }

    pub fn numeric_column(&self, name: &str) -> Result<Vec<Option<f64>>> {
        let k = self.column_index(name)?;
        if self.columns[k].1 != ColumnType::Numeric {
            return Err(Error::NotNumeric(name.to_string()));
        }
        Ok(self.rows.iter().map(|r| r[k].as_f64()).collect())
    }

    pub fn project(&self, names: &[&str]) -> Result<Frame> {
        let idx = names
            .iter()
            .map(|n| self.column_index(n))
            .collect::<Result<Vec<_>>>()?;
        let mut out = Frame::new(idx.iter().map(|&k| self.columns[k].clone()).collect())?;
        out.rows = self
            .rows
            .iter()
            .map(|r| idx.iter().map(|&k| r[k].clone()).collect())
            .collect();
        Ok(out)
    }

    pub fn filter(&self, mut keep: impl FnMut(&[Cell]) -> bool) -> Frame {
        Frame {
            columns: self.columns.clone(),
            rows: self.rows.iter().filter(|r| keep(r)).cloned().collect(),
        }
    }

    /// Appends text columns `state` and `region` looked up from the `hsa`
    /// column. Existing columns of those names are left as they are.
    pub fn with_regions(&self, map: &RegionMap) -> Result<Frame> {
        let hsa = self.column_index(HSA_COLUMN)?;
        let mut out = self.clone();
        for (name, pick) in [("state", 0usize), ("region", 1)] {
            if out.has_column(name) {
                continue;
            }
            out.columns.push((name.to_string(), ColumnType::Text));
            for row in &mut out.rows {
                let labels = row[hsa]
                    .label()
                    .map_or_else(RegionLabels::unassigned, |h| map.rollup(&h));
                let value = if pick == 0 { labels.state } else { labels.region };
                row.push(Cell::Text(value));
            }
        }
        Ok(out)
    }
}

/// The metadata tables that can accompany the feature table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(
    feature = "serde",
    derive(Serialize, Deserialize),
    serde(rename_all = "snake_case")
)]
pub enum TableName {
    PopulationCensus,
    HedisMeasures,
    PostDischargeRecords,
    StandardPricing,
    HospitalAtlasData,
}

impl TableName {
    pub const FEATURES: &'static str = "referral_network_features";
    pub const INTERACTIONS: &'static str = "local_physician_interactions";

    pub const ALL: [TableName; 5] = [
        Self::HedisMeasures,
        Self::HospitalAtlasData,
        Self::PopulationCensus,
        Self::PostDischargeRecords,
        Self::StandardPricing,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::PopulationCensus => "population_census",
            Self::HedisMeasures => "hedis_measures",
            Self::PostDischargeRecords => "post_discharge_records",
            Self::StandardPricing => "standard_pricing",
            Self::HospitalAtlasData => "hospital_atlas_data",
        }
    }

    /// Tables keyed by `(hsa, year)`; the hospital atlas is keyed by provider.
    pub fn is_region_keyed(&self) -> bool {
        !matches!(self, Self::HospitalAtlasData)
    }
}

impl fmt::Display for TableName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TableName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|t| t.as_str() == s.trim())
            .ok_or_else(|| Error::InvalidConfig(format!("unknown metadata table `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct MetadataTable {
    pub name: TableName,
    pub frame: Frame,
}

fn row_key(row: &[Cell], hsa: usize, year: usize) -> Option<(String, String)> {
    Some((row[hsa].label()?, row[year].label()?))
}

/// Left-joins each metadata table onto `features` by `(hsa, year)`.
///
/// Row count and order of `features` are preserved; unmatched rows get absent
/// cells. Tables without rows are skipped entirely.
pub fn join_metadata(features: &Frame, tables: &[MetadataTable]) -> Result<Frame> {
    let missing = |table: &str, column: &str| Error::MissingKeyColumn {
        table: table.to_string(),
        column: column.to_string(),
    };
    let f_hsa = features
        .column_index(HSA_COLUMN)
        .map_err(|_| missing(TableName::FEATURES, HSA_COLUMN))?;
    let f_year = features
        .column_index(YEAR_COLUMN)
        .map_err(|_| missing(TableName::FEATURES, YEAR_COLUMN))?;
    let mut out = features.clone();

    for table in tables {
        let t = &table.frame;
        if t.is_empty() {
            continue;
        }
        let name = table.name.as_str();
        let hsa = t.column_index(HSA_COLUMN).map_err(|_| missing(name, HSA_COLUMN))?;
        let year = t.column_index(YEAR_COLUMN).map_err(|_| missing(name, YEAR_COLUMN))?;

        let mut index: BTreeMap<(String, String), usize> = BTreeMap::new();
        for (k, row) in t.rows.iter().enumerate() {
            if let Some(key) = row_key(row, hsa, year) {
                if index.contains_key(&key) {
                    return Err(Error::DuplicateKey {
                        table: name.to_string(),
                        key: format!("{}/{}", key.0, key.1),
                    });
                }
                index.insert(key, k);
            }
        }

        let extra: Vec<usize> = (0..t.columns.len()).filter(|&k| k != hsa && k != year).collect();
        for &k in &extra {
            let col = &t.columns[k];
            if out.has_column(&col.0) {
                return Err(Error::DuplicateColumn(col.0.clone()));
            }
            out.columns.push(col.clone());
        }
        for row in &mut out.rows {
            let hit = row_key(row, f_hsa, f_year).and_then(|key| index.get(&key).copied());
            for &k in &extra {
                row.push(hit.map_or(Cell::Absent, |m| t.rows[m][k].clone()));
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(
    feature = "serde",
    derive(Serialize, Deserialize),
    serde(rename_all = "lowercase")
)]
pub enum CorrelationMethod {
    Pearson,
    Spearman,
}

impl CorrelationMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Pearson => "pearson",
            Self::Spearman => "spearman",
        }
    }
}

impl FromStr for CorrelationMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "pearson" => Ok(Self::Pearson),
            "spearman" => Ok(Self::Spearman),
            other => Err(Error::InvalidConfig(format!("unknown correlation method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct CorrelationResult {
    pub x: String,
    pub y: String,
    pub method: CorrelationMethod,
    pub coefficient: f64,
    pub n: usize,
    /// Two-sided permutation p-value; `None` when no permutations were run.
    pub p_value: Option<f64>,
    pub permutations: usize,
    /// Group column → value; empty when ungrouped.
    pub group: BTreeMap<String, String>,
}

/// Correlation of two numeric columns, optionally per group.
///
/// Rows with an absent `x` or `y` are dropped pair-wise. Groups with fewer
/// than three pairs, or where either side is constant, are not reported.
/// Pairs are put in a canonical order before permuting, and each group draws
/// from its own stream of a ChaCha generator seeded with `seed`, so results do
/// not depend on row order.
pub fn correlate(
    frame: &Frame,
    x: &str,
    y: &str,
    method: CorrelationMethod,
    group_by: &[&str],
    permutations: usize,
    seed: u64,
) -> Result<Vec<CorrelationResult>> {
    let xs = frame.numeric_column(x)?;
    let ys = frame.numeric_column(y)?;
    let group_idx = group_by
        .iter()
        .map(|g| frame.column_index(g))
        .collect::<Result<Vec<_>>>()?;

    let mut groups: BTreeMap<Vec<String>, Vec<(f64, f64)>> = BTreeMap::new();
    for (k, row) in frame.rows.iter().enumerate() {
        let (Some(a), Some(b)) = (xs[k], ys[k]) else {
            continue;
        };
        let key = group_idx
            .iter()
            .map(|&g| row[g].label().unwrap_or_else(|| UNASSIGNED.to_string()))
            .collect();
        groups.entry(key).or_default().push((a, b));
    }

    let coefficient = |a: &[f64], b: &[f64]| match method {
        CorrelationMethod::Pearson => stats::pearson(a, b),
        CorrelationMethod::Spearman => stats::spearman(a, b),
    };

    let mut results = Vec::new();
    for (stream, (key, mut pairs)) in groups.into_iter().enumerate() {
        if pairs.len() < 3 {
            continue;
        }
        pairs.sort_by(|p, q| p.0.total_cmp(&q.0).then(p.1.total_cmp(&q.1)));
        let (a, b): (Vec<f64>, Vec<f64>) = pairs.iter().copied().unzip();
        let Some(observed) = coefficient(&a, &b) else {
            continue;
        };

        let p_value = (permutations > 0).then(|| {
            // Ranks are invariant under permutation, so rank once up front.
            let (a, mut b) = match method {
                CorrelationMethod::Pearson => (a.clone(), b.clone()),
                CorrelationMethod::Spearman => (stats::average_ranks(&a), stats::average_ranks(&b)),
            };
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(stream as u64);
            let threshold = observed.abs() - 1e-12;
            let mut extreme = 0usize;
            for _ in 0..permutations {
                b.shuffle(&mut rng);
                if stats::pearson(&a, &b).is_some_and(|r| r.abs() >= threshold) {
                    extreme += 1;
                }
            }
            extreme as f64 / permutations as f64
        });

        results.push(CorrelationResult {
            x: x.to_string(),
            y: y.to_string(),
            method,
            coefficient: observed,
            n: pairs.len(),
            p_value,
            permutations,
            group: group_by.iter().map(|g| g.to_string()).zip(key).collect(),
        });
    }
    Ok(results)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct BinSpec {
    pub bins: usize,
    /// Shared histogram range; defaults to the min/max over all groups.
    pub range: Option<(f64, f64)>,
}

impl Default for BinSpec {
    fn default() -> Self {
        Self {
            bins: 20,
            range: None,
        }
    }
}

/// Box/violin statistics and a histogram for one group.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct DistributionSummary {
    pub group: String,
    pub count: usize,
    pub mean: f64,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub iqr: f64,
    /// Most extreme values within 1.5 IQR of the quartiles.
    pub whisker_low: f64,
    pub whisker_high: f64,
    pub bin_edges: Vec<f64>,
    pub bin_counts: Vec<usize>,
}

/// Per-group quartiles (see [`stats::quantile_sorted`]) and a histogram with
/// bins shared by all groups. Non-finite values are ignored.
pub fn distribution_summary<I>(values: I, spec: &BinSpec) -> Result<Vec<DistributionSummary>>
where
    I: IntoIterator<Item = (String, f64)>,
{
    if spec.bins == 0 {
        return Err(Error::InvalidConfig("at least one bin is required".to_string()));
    }
    let mut groups: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for (g, v) in values {
        if v.is_finite() {
            groups.entry(g).or_default().push(v);
        }
    }
    let (mut lo, mut hi) = match spec.range {
        Some((lo, hi)) if lo.is_finite() && hi.is_finite() && lo <= hi => (lo, hi),
        Some(_) => return Err(Error::InvalidConfig("invalid histogram range".to_string())),
        None => groups
            .values()
            .flatten()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v))),
    };
    if lo == hi {
        lo -= 0.5;
        hi += 0.5;
    }
    let width = (hi - lo) / spec.bins as f64;
    let edges: Vec<f64> = (0..=spec.bins)
        .map(|k| if k == spec.bins { hi } else { lo + width * k as f64 })
        .collect();

    let mut out = Vec::with_capacity(groups.len());
    for (group, mut vals) in groups {
        vals.sort_by(f64::total_cmp);
        let q = |p| stats::quantile_sorted(&vals, p).unwrap();
        let (q1, median, q3) = (q(0.25), q(0.5), q(0.75));
        let iqr = q3 - q1;
        let (fence_lo, fence_hi) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
        let mut counts = vec![0usize; spec.bins];
        for &v in &vals {
            if v < lo || v > hi {
                continue;
            }
            let k = libm::floor((v - lo) / width) as usize;
            counts[k.min(spec.bins - 1)] += 1;
        }
        out.push(DistributionSummary {
            count: vals.len(),
            mean: stats::mean(&vals).unwrap(),
            min: vals[0],
            q1,
            median,
            q3,
            max: vals[vals.len() - 1],
            iqr,
            whisker_low: vals.iter().copied().find(|&v| v >= fence_lo).unwrap(),
            whisker_high: vals.iter().rev().copied().find(|&v| v <= fence_hi).unwrap(),
            bin_edges: edges.clone(),
            bin_counts: counts,
            group,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct RegionLabels {
    pub state: String,
    pub region: String,
}

impl RegionLabels {
    pub fn unassigned() -> Self {
        Self {
            state: UNASSIGNED.to_string(),
            region: UNASSIGNED.to_string(),
        }
    }
}

/// HSA → (state, region) lookup.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RegionMap {
    entries: BTreeMap<String, RegionLabels>,
}

impl RegionMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, hsa: &str, state: &str, region: &str) -> Result<()> {
        let hsa = hsa.trim();
        if self.entries.contains_key(hsa) {
            return Err(Error::DuplicateKey {
                table: "region map".to_string(),
                key: hsa.to_string(),
            });
        }
        self.entries.insert(
            hsa.to_string(),
            RegionLabels {
                state: state.trim().to_string(),
                region: region.trim().to_string(),
            },
        );
        Ok(())
    }

    pub fn rollup(&self, hsa: &str) -> RegionLabels {
        self.entries
            .get(hsa.trim())
            .cloned()
            .unwrap_or_else(RegionLabels::unassigned)
    }

    pub fn regions(&self) -> BTreeSet<&str> {
        self.entries.values().map(|l| l.region.as_str()).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}
