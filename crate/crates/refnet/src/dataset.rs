//! In-memory snapshot of a pipeline directory, shared by the analysis
//! commands and the HTTP API.

use std::path::{Path, PathBuf};

use refnet_core::{
    analytics::{feature_columns, features_frame, HSA_COLUMN, YEAR_COLUMN},
    correlate, curvature::node_curvatures, descriptors::degree_centrality, distribution_summary,
    join_metadata, BinSpec, Cell, ColumnType, CorrelationMethod, CorrelationResult, CurvatureKind,
    DistributionSummary, Frame, MetadataTable, RegionLabels, RegionMap,
};
use serde::Serialize;

use crate::{
    bundle::{read_bundle_dir, GraphBundle},
    error::Result,
    ingest::{read_metadata_dir, read_region_map},
    parallel,
    pipeline::{bundle_dir, features, FEATURES_CSV},
    table::read_frame_csv,
};

pub const METADATA_DIR: &str = "metadata";
pub const REGION_MAP: &str = "regions.csv";
pub const DEFAULT_PERMUTATIONS: usize = 1000;
pub const DEFAULT_SEED: u64 = 0;

/// Where a dataset's optional inputs live. `None` falls back to the
/// conventional locations inside the dataset directory when they exist.
#[derive(Debug, Clone, Default)]
pub struct DatasetPaths {
    pub metadata: Option<PathBuf>,
    pub region_map: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NodeMetrics {
    pub degree: usize,
    pub degree_centrality: f64,
    pub betweenness: f64,
    pub frc: Option<f64>,
    pub orc: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Network {
    pub bundle: GraphBundle,
    pub labels: RegionLabels,
    /// Empty unless node metrics were requested at load time.
    pub nodes: Vec<NodeMetrics>,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub version: String,
    pub networks: Vec<Network>,
    pub metadata: Vec<MetadataTable>,
    pub regions: RegionMap,
    /// The feature table as produced by the pipeline.
    pub features: Frame,
    /// Features joined with region-keyed metadata and `state`/`region` labels.
    pub frame: Frame,
}

/// Filters accepted by the list endpoints.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Filters {
    pub hsa: Option<String>,
    pub year: Option<i32>,
    pub state: Option<String>,
    pub region: Option<String>,
}

impl Filters {
    pub fn accepts(&self, hsa: &str, year: i32, labels: &RegionLabels) -> bool {
        self.hsa.as_deref().is_none_or(|h| h == hsa)
            && self.year.is_none_or(|y| y == year)
            && self.state.as_deref().is_none_or(|s| s == labels.state)
            && self.region.as_deref().is_none_or(|r| r == labels.region)
    }
}

fn resolve(explicit: &Option<PathBuf>, root: &Path, name: &str) -> Option<PathBuf> {
    explicit.clone().or_else(|| {
        let p = root.join(name);
        p.exists().then_some(p)
    })
}

impl Dataset {
    /// Loads bundles, the feature table (recomputed if `features.csv` is
    /// missing), metadata and the region map. With `node_metrics`, per-node
    /// centralities and curvatures are computed up front.
    pub fn load(root: &Path, paths: &DatasetPaths, node_metrics: bool, pool: &rayon::ThreadPool) -> Result<Self> {
        let bundles = read_bundle_dir(&bundle_dir(root))?;
        let features_path = root.join(FEATURES_CSV);
        let features_table = if features_path.exists() {
            read_frame_csv(&features_path, &feature_columns())?
        } else {
            features_frame(&features(&bundles, pool)?)
        };
        let metadata = match resolve(&paths.metadata, root, METADATA_DIR) {
            Some(dir) => read_metadata_dir(&dir)?,
            None => Vec::new(),
        };
        let regions = match resolve(&paths.region_map, root, REGION_MAP) {
            Some(p) => read_region_map(&p)?,
            None => RegionMap::new(),
        };
        let networks = bundles
            .into_iter()
            .map(|bundle| {
                let labels = regions.rollup(&bundle.key().hsa);
                let nodes = if node_metrics {
                    compute_node_metrics(&bundle, pool)
                } else {
                    Vec::new()
                };
                Network { bundle, labels, nodes }
            })
            .collect();
        Self::assemble(env!("CARGO_PKG_VERSION").to_string(), networks, features_table, metadata, regions)
    }

    pub fn assemble(
        version: String,
        networks: Vec<Network>,
        features: Frame,
        metadata: Vec<MetadataTable>,
        regions: RegionMap,
    ) -> Result<Self> {
        let keyed: Vec<MetadataTable> = metadata
            .iter()
            .filter(|t| t.name.is_region_keyed())
            .cloned()
            .collect();
        let frame = join_metadata(&features, &keyed)?.with_regions(&regions)?;
        Ok(Self {
            version,
            networks,
            metadata,
            regions,
            features,
            frame,
        })
    }

    pub fn network(&self, hsa: &str, year: i32) -> Option<&Network> {
        self.networks
            .binary_search_by(|n| {
                let k = n.bundle.key();
                (k.hsa.as_str(), k.year).cmp(&(hsa, year))
            })
            .ok()
            .map(|i| &self.networks[i])
    }

    pub fn filtered_frame(&self, f: &Filters) -> Result<Frame> {
        let idx = |name| self.frame.column_index(name);
        let (h, y, s, r) = (idx(HSA_COLUMN)?, idx(YEAR_COLUMN)?, idx("state")?, idx("region")?);
        Ok(self.frame.filter(|row| {
            let text = |c: &Cell| c.label().unwrap_or_default();
            let year = row[y].as_f64().map(|v| v as i32).unwrap_or(i32::MIN);
            let labels = RegionLabels {
                state: text(&row[s]),
                region: text(&row[r]),
            };
            f.accepts(&text(&row[h]), year, &labels)
        }))
    }

    pub fn correlate(&self, q: &CorrelateQuery) -> Result<Vec<CorrelationResult>> {
        let frame = self.filtered_frame(&q.filters)?;
        let group: Vec<&str> = q.group.iter().map(String::as_str).collect();
        for g in &group {
            frame.column_index(g)?;
        }
        Ok(correlate(&frame, &q.x, &q.y, q.method, &group, q.permutations, q.seed)?)
    }

    /// `frc` and `orc` summarize edge values; any other metric must be a
    /// numeric column of the feature frame and is summarized per network.
    pub fn distributions(&self, q: &DistributionQuery) -> Result<Distributions> {
        let level;
        let mut values: Vec<(String, f64)> = Vec::new();
        match q.metric.as_str() {
            "frc" | "orc" => {
                level = "edge";
                let kind = if q.metric == "frc" { CurvatureKind::Frc } else { CurvatureKind::Orc };
                if let Some(g) = &q.group {
                    if !matches!(g.as_str(), "hsa" | "year" | "state" | "region") {
                        return Err(refnet_core::Error::UnknownColumn(g.clone()).into());
                    }
                }
                for n in &self.networks {
                    let key = n.bundle.key();
                    if !q.filters.accepts(&key.hsa, key.year, &n.labels) {
                        continue;
                    }
                    let label = match q.group.as_deref() {
                        None => "all".to_string(),
                        Some("hsa") => key.hsa.clone(),
                        Some("year") => key.year.to_string(),
                        Some("state") => n.labels.state.clone(),
                        _ => n.labels.region.clone(),
                    };
                    if let Some(r) = &n.bundle.report {
                        values.extend(r.values(kind).map(|v| (label.clone(), v)));
                    }
                }
            }
            metric => {
                level = "network";
                let frame = self.filtered_frame(&q.filters)?;
                let column = frame.numeric_column(metric)?;
                let group = q.group.as_deref().map(|g| frame.column_index(g)).transpose()?;
                for (row, v) in frame.rows().iter().zip(column) {
                    if let Some(v) = v {
                        let label = match group {
                            Some(k) => row[k].label().unwrap_or_else(|| refnet_core::analytics::UNASSIGNED.to_string()),
                            None => "all".to_string(),
                        };
                        values.push((label, v));
                    }
                }
            }
        }
        Ok(Distributions {
            metric: q.metric.clone(),
            group: q.group.clone(),
            level,
            groups: distribution_summary(values, &q.bins)?,
        })
    }

    pub fn columns(&self) -> &[(String, ColumnType)] {
        self.frame.columns()
    }
}

fn compute_node_metrics(bundle: &GraphBundle, pool: &rayon::ThreadPool) -> Vec<NodeMetrics> {
    let g = &bundle.graph;
    let bc = parallel::betweenness(pool, g);
    let (frc, orc) = match &bundle.report {
        Some(r) => (node_curvatures(r, g, CurvatureKind::Frc), node_curvatures(r, g, CurvatureKind::Orc)),
        None => (vec![None; g.node_count()], vec![None; g.node_count()]),
    };
    (0..g.node_count())
        .map(|v| NodeMetrics {
            degree: g.neighbors(v).len(),
            degree_centrality: degree_centrality(g, v).unwrap_or(0.0),
            betweenness: bc[v],
            frc: frc[v],
            orc: orc[v],
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct CorrelateQuery {
    pub x: String,
    pub y: String,
    pub method: CorrelationMethod,
    pub group: Vec<String>,
    pub permutations: usize,
    pub seed: u64,
    pub filters: Filters,
}

impl CorrelateQuery {
    pub fn new(x: impl Into<String>, y: impl Into<String>) -> Self {
        Self {
            x: x.into(),
            y: y.into(),
            method: CorrelationMethod::Pearson,
            group: Vec::new(),
            permutations: DEFAULT_PERMUTATIONS,
            seed: DEFAULT_SEED,
            filters: Filters::default(),
        }
    }
}

/// Body shared by `refnet correlate` and `GET /correlate`.
#[derive(Debug, Clone, Serialize)]
pub struct CorrelateResponse {
    pub x: String,
    pub y: String,
    pub method: CorrelationMethod,
    pub group: Vec<String>,
    pub permutations: usize,
    pub seed: u64,
    pub results: Vec<CorrelationResult>,
}

impl CorrelateResponse {
    pub fn run(data: &Dataset, q: &CorrelateQuery) -> Result<Self> {
        Ok(Self {
            x: q.x.clone(),
            y: q.y.clone(),
            method: q.method,
            group: q.group.clone(),
            permutations: q.permutations,
            seed: q.seed,
            results: data.correlate(q)?,
        })
    }
}

#[derive(Debug, Clone)]
pub struct DistributionQuery {
    pub metric: String,
    pub group: Option<String>,
    pub bins: BinSpec,
    pub filters: Filters,
}

#[derive(Debug, Clone, Serialize)]
pub struct Distributions {
    pub metric: String,
    pub group: Option<String>,
    pub level: &'static str,
    pub groups: Vec<DistributionSummary>,
}
