//! JSON graph bundles: one network with its optional curvature report.

use std::{
    fs,
    io::Write,
    path::{Path, PathBuf},
};

use refnet_core::{CurvatureReport, Graph, NetworkKey, ProviderId};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const BUNDLE_FORMAT: &str = "refnet-graph-bundle";
pub const BUNDLE_VERSION: u32 = 1;
pub const BUNDLE_DIR: &str = "bundles";

#[derive(Debug, Clone, PartialEq)]
pub struct GraphBundle {
    pub graph: Graph,
    pub report: Option<CurvatureReport>,
}

#[derive(Serialize, Deserialize)]
struct Wire {
    format: String,
    version: u32,
    hsa: String,
    year: i32,
    nodes: Vec<ProviderId>,
    /// `[i, j, weight]` with `i < j`, in canonical order.
    edges: Vec<(usize, usize, u64)>,
    curvature: Option<CurvatureReport>,
}

impl GraphBundle {
    pub fn new(graph: Graph) -> Self {
        Self { graph, report: None }
    }

    pub fn key(&self) -> &NetworkKey {
        self.graph.key()
    }

    pub fn to_json(&self) -> Result<Vec<u8>> {
        let g = &self.graph;
        let wire = Wire {
            format: BUNDLE_FORMAT.to_string(),
            version: BUNDLE_VERSION,
            hsa: g.key().hsa.clone(),
            year: g.key().year,
            nodes: g.node_ids().to_vec(),
            edges: g
                .edges()
                .iter()
                .zip(g.weights())
                .map(|(&(i, j), &w)| (i, j, w))
                .collect(),
            curvature: self.report.clone(),
        };
        let mut out = serde_json::to_vec(&wire).map_err(|e| Error::Internal(e.to_string()))?;
        out.push(b'\n');
        Ok(out)
    }

    pub fn from_json(bytes: &[u8], origin: &Path) -> Result<Self> {
        let wire: Wire = serde_json::from_slice(bytes).map_err(Error::json(origin))?;
        if wire.format != BUNDLE_FORMAT || wire.version != BUNDLE_VERSION {
            return Err(Error::Data(format!(
                "{}: not a version {BUNDLE_VERSION} graph bundle",
                origin.display()
            )));
        }
        let key = NetworkKey::new(wire.hsa, wire.year);
        let graph = Graph::from_edges(key, wire.nodes, wire.edges)
            .map_err(|e| Error::Data(format!("{}: {e}", origin.display())))?;
        if let Some(r) = &wire.curvature {
            if r.key != *graph.key() {
                return Err(Error::Data(format!("{}: curvature report is for {}", origin.display(), r.key)));
            }
            r.check_against(&graph)
                .map_err(|e| Error::Data(format!("{}: {e}", origin.display())))?;
        }
        Ok(Self {
            graph,
            report: wire.curvature,
        })
    }
}

/// File name for a network key; characters outside `[A-Za-z0-9._-]` in the
/// region id are percent-encoded.
pub fn bundle_file_name(key: &NetworkKey) -> String {
    let mut name = String::new();
    for b in key.hsa.bytes() {
        if b.is_ascii_alphanumeric() || b"._-".contains(&b) {
            name.push(b as char);
        } else {
            name.push_str(&format!("%{b:02X}"));
        }
    }
    format!("{name}__{}.json", key.year)
}

pub fn write_bundle(bundle: &GraphBundle, path: &Path) -> Result<()> {
    write_atomic(path, &bundle.to_json()?)
}

pub fn read_bundle(path: &Path) -> Result<GraphBundle> {
    let bytes = fs::read(path).map_err(Error::io(path))?;
    GraphBundle::from_json(&bytes, path)
}

/// Bundle files in `dir`, sorted by name.
pub fn list_bundles(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(Error::io(dir))? {
        let path = entry.map_err(Error::io(dir))?.path();
        if path.extension().is_some_and(|e| e == "json") && path.is_file() {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

/// All bundles in `dir`, sorted by network key.
pub fn read_bundle_dir(dir: &Path) -> Result<Vec<GraphBundle>> {
    let mut out = list_bundles(dir)?
        .iter()
        .map(|p| read_bundle(p))
        .collect::<Result<Vec<_>>>()?;
    out.sort_by(|a, b| a.key().cmp(b.key()));
    if let Some(w) = out.windows(2).find(|w| w[0].key() == w[1].key()) {
        return Err(Error::Data(format!("{}: two bundles for network {}", dir.display(), w[0].key())));
    }
    Ok(out)
}

/// Writes through a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(Error::io(parent))?;
    }
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("")
    ));
    let mut f = fs::File::create(&tmp).map_err(Error::io(&tmp))?;
    f.write_all(bytes).map_err(Error::io(&tmp))?;
    f.sync_all().map_err(Error::io(&tmp))?;
    drop(f);
    fs::rename(&tmp, path).map_err(Error::io(path))
}
