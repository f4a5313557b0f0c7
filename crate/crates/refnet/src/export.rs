//! File exports and the manifest that describes them.

use std::path::{Path, PathBuf};

use refnet_core::{CurvatureConfig, CurvatureKinds};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::{
    bundle::{write_atomic, GraphBundle},
    dataset::Dataset,
    error::{Error, Result},
    pipeline::BUILD_LOG,
    sqldb::{export_tables, interactions_table, write_sqldb},
    table::{format_number, frame_csv_bytes},
};

pub const SQLDB_FILE: &str = "refnet.sqlite";
pub const FEATURES_FILE: &str = "features.csv";
pub const CURVATURE_CSV: &str = "curvature.csv";
pub const CURVATURE_JSONL: &str = "curvature.jsonl";
pub const MANIFEST_FILE: &str = "manifest.json";

pub const CURVATURE_COLUMNS: [&str; 7] = ["hsa", "year", "npi_i", "npi_j", "weight", "frc", "orc"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FileEntry {
    pub path: String,
    /// Data rows, excluding any header.
    pub rows: Option<usize>,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TableEntry {
    pub name: String,
    pub rows: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Manifest {
    pub dataset_version: String,
    pub created_at: String,
    pub config_hash: String,
    pub files: Vec<FileEntry>,
    pub tables: Vec<TableEntry>,
}

#[derive(Debug, Clone, Default)]
pub struct ExportOptions {
    pub dataset_version: Option<String>,
    /// Include `local_physician_interactions` rows.
    pub emit_interactions: bool,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Serialize)]
struct CurvatureRow<'a> {
    hsa: &'a str,
    year: i32,
    npi_i: &'a str,
    npi_j: &'a str,
    weight: u64,
    frc: Option<f64>,
    orc: Option<f64>,
}

fn curvature_rows(bundles: &[GraphBundle]) -> impl Iterator<Item = CurvatureRow<'_>> {
    bundles.iter().flat_map(|b| {
        let g = &b.graph;
        g.edges().iter().zip(g.weights()).enumerate().map(move |(k, (&(i, j), &w))| {
            let e = b.report.as_ref().map(|r| r.edges[k]);
            CurvatureRow {
                hsa: &g.key().hsa,
                year: g.key().year,
                npi_i: g.node_ids()[i].as_str(),
                npi_j: g.node_ids()[j].as_str(),
                weight: w,
                frc: e.and_then(|e| e.frc),
                orc: e.and_then(|e| e.orc),
            }
        })
    })
}

pub fn curvature_csv(bundles: &[GraphBundle]) -> Result<(Vec<u8>, usize)> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(Vec::new());
    let wrap = |e: csv::Error| Error::Internal(format!("csv write: {e}"));
    w.write_record(CURVATURE_COLUMNS).map_err(wrap)?;
    let mut n = 0;
    let opt = |x: Option<f64>| x.map(format_number).unwrap_or_default();
    for r in curvature_rows(bundles) {
        w.write_record([
            r.hsa.to_string(),
            r.year.to_string(),
            r.npi_i.to_string(),
            r.npi_j.to_string(),
            r.weight.to_string(),
            opt(r.frc),
            opt(r.orc),
        ])
        .map_err(wrap)?;
        n += 1;
    }
    let bytes = w.into_inner().map_err(|e| Error::Internal(e.to_string()))?;
    Ok((bytes, n))
}

pub fn curvature_jsonl(bundles: &[GraphBundle]) -> Result<(Vec<u8>, usize)> {
    let mut out = Vec::new();
    let mut n = 0;
    for r in curvature_rows(bundles) {
        serde_json::to_writer(&mut out, &r).map_err(|e| Error::Internal(e.to_string()))?;
        out.push(b'\n');
        n += 1;
    }
    Ok((out, n))
}

#[derive(Serialize)]
struct Fingerprint<'a> {
    dataset_version: &'a str,
    emit_interactions: bool,
    build: Option<serde_json::Value>,
    curvature: Vec<(CurvatureKinds, CurvatureConfig)>,
}

fn config_hash(root: &Path, bundles: &[GraphBundle], version: &str, opts: &ExportOptions) -> Result<String> {
    let build = match std::fs::read(root.join(BUILD_LOG)) {
        Ok(bytes) => {
            let mut v: serde_json::Value =
                serde_json::from_slice(&bytes).map_err(Error::json(root.join(BUILD_LOG)))?;
            if let Some(obj) = v.as_object_mut() {
                obj.retain(|k, _| matches!(k.as_str(), "threshold" | "symmetrization" | "keep_isolated" | "excluded_providers"));
            }
            Some(v)
        }
        Err(_) => None,
    };
    let mut curvature: Vec<(CurvatureKinds, CurvatureConfig)> = Vec::new();
    for b in bundles {
        if let Some(r) = &b.report {
            if !curvature.contains(&(r.kinds, r.config)) {
                curvature.push((r.kinds, r.config));
            }
        }
    }
    let fp = Fingerprint {
        dataset_version: version,
        emit_interactions: opts.emit_interactions,
        build,
        curvature,
    };
    let bytes = serde_json::to_vec(&fp).map_err(|e| Error::Internal(e.to_string()))?;
    Ok(sha256_hex(&bytes))
}

fn emit(out: &Path, name: &str, bytes: &[u8], rows: Option<usize>) -> Result<FileEntry> {
    write_atomic(&out.join(name), bytes)?;
    Ok(FileEntry {
        path: name.to_string(),
        rows,
        sha256: sha256_hex(bytes),
    })
}

/// Writes the SQLite database, feature and curvature files and a manifest
/// into `out`. Everything except the manifest's timestamp is a pure function
/// of the dataset.
pub fn export_all(root: &Path, data: &Dataset, out: &Path, opts: &ExportOptions) -> Result<Manifest> {
    let features = &data.features;
    let bundles: Vec<GraphBundle> = data.networks.iter().map(|n| n.bundle.clone()).collect();
    let version = opts
        .dataset_version
        .clone()
        .unwrap_or_else(|| data.version.clone());

    let mut files = Vec::new();
    files.push(emit(out, FEATURES_FILE, &frame_csv_bytes(features)?, Some(features.len()))?);
    let (csv_bytes, n) = curvature_csv(&bundles)?;
    files.push(emit(out, CURVATURE_CSV, &csv_bytes, Some(n))?);
    let (jsonl, n) = curvature_jsonl(&bundles)?;
    files.push(emit(out, CURVATURE_JSONL, &jsonl, Some(n))?);

    let interactions = opts.emit_interactions.then(|| interactions_table(&bundles));
    let tables = export_tables(features, &data.metadata, interactions);
    let db_path: PathBuf = out.join(SQLDB_FILE);
    let counts = write_sqldb(&db_path, &tables)?;
    let db_bytes = std::fs::read(&db_path).map_err(Error::io(&db_path))?;
    files.push(FileEntry {
        path: SQLDB_FILE.to_string(),
        rows: None,
        sha256: sha256_hex(&db_bytes),
    });

    let manifest = Manifest {
        config_hash: config_hash(root, &bundles, &version, opts)?,
        dataset_version: version,
        created_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        files,
        tables: counts
            .into_iter()
            .map(|(name, rows)| TableEntry { name, rows })
            .collect(),
    };
    let mut text = serde_json::to_vec_pretty(&manifest).map_err(|e| Error::Internal(e.to_string()))?;
    text.push(b'\n');
    write_atomic(&out.join(MANIFEST_FILE), &text)?;
    Ok(manifest)
}
