//! Pipeline stages that move data between the on-disk layouts:
//! edge lists → bundles → bundles with curvature → feature table.

use std::{
    fs,
    path::{Path, PathBuf},
};

use refnet_core::{
    analytics::{check_unique_keys, features_frame},
    build_network, partition, CurvatureConfig, CurvatureKinds, EdgeRecord,
    FilterConfig, NetworkFeatures, ParseStats,
};
use serde::Serialize;

use crate::{
    bundle::{bundle_file_name, read_bundle_dir, write_atomic, write_bundle, GraphBundle, BUNDLE_DIR},
    error::{Error, Result},
    ingest::{read_edge_file, EdgeFormat},
    parallel,
};

pub const BUILD_LOG: &str = "build_log.json";
pub const FEATURES_CSV: &str = "features.csv";

#[derive(Debug, Clone, Serialize)]
pub struct NetworkLog {
    pub hsa: String,
    pub year: i32,
    pub records: usize,
    pub nodes: usize,
    pub edges: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct BuildLog {
    pub parse: ParseStats,
    pub threshold: u64,
    pub symmetrization: &'static str,
    pub keep_isolated: bool,
    pub excluded_providers: usize,
    pub networks: Vec<NetworkLog>,
    pub warnings: Vec<String>,
}

pub fn bundle_dir(root: &Path) -> PathBuf {
    root.join(BUNDLE_DIR)
}

/// Parses every input, partitions by `(hsa, year)` and writes one bundle per
/// network under `out/bundles`, replacing bundles from earlier runs.
pub fn build(inputs: &[PathBuf], format: Option<EdgeFormat>, config: &FilterConfig, out: &Path) -> Result<BuildLog> {
    config.validate()?;
    let mut stats = ParseStats::default();
    let mut records: Vec<EdgeRecord> = Vec::new();
    for path in inputs {
        let (r, s) = read_edge_file(path, format)?;
        stats.merge(&s);
        records.extend(r);
    }

    let dir = bundle_dir(out);
    fs::create_dir_all(&dir).map_err(Error::io(&dir))?;
    for old in crate::bundle::list_bundles(&dir)? {
        fs::remove_file(&old).map_err(Error::io(&old))?;
    }

    let mut networks = Vec::new();
    let mut warnings = Vec::new();
    for (key, bucket) in partition(records) {
        let g = build_network(&bucket, config)?;
        if g.edge_count() == 0 {
            let msg = format!("network {key}: no pair reaches {} shared patients", config.min_shared_patients);
            log::warn!("{msg}");
            warnings.push(msg);
        }
        networks.push(NetworkLog {
            hsa: key.hsa.clone(),
            year: key.year,
            records: bucket.len(),
            nodes: g.node_count(),
            edges: g.edge_count(),
        });
        write_bundle(&GraphBundle::new(g), &dir.join(bundle_file_name(&key)))?;
    }

    let log = BuildLog {
        parse: stats,
        threshold: config.min_shared_patients,
        symmetrization: config.symmetrization.as_str(),
        keep_isolated: config.keep_isolated,
        excluded_providers: config.excluded_providers.len(),
        networks,
        warnings,
    };
    let mut text = serde_json::to_vec_pretty(&log).map_err(|e| Error::Internal(e.to_string()))?;
    text.push(b'\n');
    write_atomic(&out.join(BUILD_LOG), &text)?;
    Ok(log)
}

/// Adds a curvature report to every bundle in `root/bundles`.
pub fn curvature(
    root: &Path,
    kinds: CurvatureKinds,
    config: &CurvatureConfig,
    pool: &rayon::ThreadPool,
) -> Result<usize> {
    let dir = bundle_dir(root);
    let paths = crate::bundle::list_bundles(&dir)?;
    for path in &paths {
        let mut b = crate::bundle::read_bundle(path)?;
        b.report = Some(parallel::curvature_report(pool, &b.graph, kinds, config)?);
        write_bundle(&b, path)?;
    }
    Ok(paths.len())
}

pub fn features(bundles: &[GraphBundle], pool: &rayon::ThreadPool) -> Result<Vec<NetworkFeatures>> {
    let mut rows = bundles
        .iter()
        .map(|b| {
            let bc = parallel::betweenness(pool, &b.graph);
            NetworkFeatures::with_betweenness(&b.graph, b.report.as_ref(), &bc)
        })
        .collect::<refnet_core::Result<Vec<_>>>()?;
    rows.sort_by(|a, b| a.key.cmp(&b.key));
    check_unique_keys(&rows)?;
    Ok(rows)
}

/// Reads the bundles under `root` and writes `root/features.csv`.
pub fn write_features(root: &Path, pool: &rayon::ThreadPool) -> Result<Vec<NetworkFeatures>> {
    let bundles = read_bundle_dir(&bundle_dir(root))?;
    let rows = features(&bundles, pool)?;
    let frame = features_frame(&rows);
    write_atomic(&root.join(FEATURES_CSV), &crate::table::frame_csv_bytes(&frame)?)?;
    Ok(rows)
}
