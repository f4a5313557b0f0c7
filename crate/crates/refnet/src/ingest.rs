//! Readers for edge lists, exclusion lists, config files, region maps and
//! metadata tables.

use std::{
    collections::{BTreeMap, BTreeSet},
    fs::File,
    io::{BufRead, BufReader, Read},
    path::{Path, PathBuf},
    str::FromStr,
};

use refnet_core::{
    analytics::{HSA_COLUMN, YEAR_COLUMN},
    Cell, ColumnType, EdgeRecord, Frame, MetadataTable, ParseStats, ProviderId, RegionMap,
    Symmetrization, TableName,
};

use crate::error::{Error, Result};

pub const EDGE_COLUMNS: [&str; 5] = ["npi_a", "npi_b", "shared_patients", "hsa", "year"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeFormat {
    Csv,
    Ndjson,
}

impl EdgeFormat {
    /// `.ndjson`, `.jsonl` and `.json` are newline-delimited JSON; anything
    /// else is read as CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
            Some("ndjson" | "jsonl" | "json") => Self::Ndjson,
            _ => Self::Csv,
        }
    }
}

impl FromStr for EdgeFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "ndjson" | "jsonl" | "json" => Ok(Self::Ndjson),
            other => Err(Error::Usage(format!("unknown input format `{other}`"))),
        }
    }
}

/// Parses an edge list. Bad rows are counted in the returned stats and
/// skipped; only I/O failures and a missing header are fatal.
pub fn read_edge_records<R: Read>(reader: R, format: EdgeFormat, origin: &Path) -> Result<(Vec<EdgeRecord>, ParseStats)> {
    match format {
        EdgeFormat::Csv => read_csv_edges(reader, origin),
        EdgeFormat::Ndjson => read_ndjson_edges(reader, origin),
    }
}

pub fn read_edge_file(path: &Path, format: Option<EdgeFormat>) -> Result<(Vec<EdgeRecord>, ParseStats)> {
    let file = File::open(path).map_err(Error::io(path))?;
    let format = format.unwrap_or_else(|| EdgeFormat::from_path(path));
    read_edge_records(BufReader::new(file), format, path)
}

fn read_csv_edges<R: Read>(reader: R, origin: &Path) -> Result<(Vec<EdgeRecord>, ParseStats)> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let mut stats = ParseStats::default();
    let mut out = Vec::new();
    let header = match rdr.headers() {
        Ok(h) => h.clone(),
        Err(e) if matches!(e.kind(), csv::ErrorKind::Io(_)) => return Err(Error::csv(origin)(e)),
        Err(e) => return Err(Error::Data(format!("{}: unreadable header: {e}", origin.display()))),
    };
    if header.is_empty() || (header.len() == 1 && header[0].trim().is_empty()) {
        return Ok((out, stats));
    }
    let mut idx = [0usize; 5];
    for (slot, name) in idx.iter_mut().zip(EDGE_COLUMNS) {
        *slot = header
            .iter()
            .position(|h| h.trim().eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::Data(format!("{}: missing column `{name}` in header", origin.display())))?;
    }
    let mut row = csv::StringRecord::new();
    loop {
        match rdr.read_record(&mut row) {
            Ok(false) => break,
            Ok(true) => {
                let field = |k: usize| row.get(idx[k]);
                let parsed = match (field(0), field(1), field(2), field(3), field(4)) {
                    (Some(a), Some(b), Some(c), Some(h), Some(y)) => EdgeRecord::from_fields(a, b, c, h, y),
                    _ => Err(refnet_core::RejectReason::Malformed),
                };
                stats.record(&parsed);
                out.extend(parsed.ok());
            }
            Err(e) if matches!(e.kind(), csv::ErrorKind::Io(_)) => return Err(Error::csv(origin)(e)),
            Err(_) => stats.record::<()>(&Err(refnet_core::RejectReason::Malformed)),
        }
    }
    Ok((out, stats))
}

fn json_field(obj: &serde_json::Map<String, serde_json::Value>, name: &str) -> Option<String> {
    match obj.get(name)? {
        serde_json::Value::String(s) => Some(s.clone()),
        serde_json::Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

fn read_ndjson_edges<R: Read>(reader: R, origin: &Path) -> Result<(Vec<EdgeRecord>, ParseStats)> {
    let mut stats = ParseStats::default();
    let mut out = Vec::new();
    for line in BufReader::new(reader).split(b'\n') {
        let line = line.map_err(Error::io(origin))?;
        if line.iter().all(u8::is_ascii_whitespace) {
            continue;
        }
        let parsed = match serde_json::from_slice::<serde_json::Value>(&line) {
            Ok(serde_json::Value::Object(obj)) => {
                let f: Vec<Option<String>> = EDGE_COLUMNS.iter().map(|c| json_field(&obj, c)).collect();
                match (&f[0], &f[1], &f[2], &f[3], &f[4]) {
                    (Some(a), Some(b), Some(c), Some(h), Some(y)) => EdgeRecord::from_fields(a, b, c, h, y),
                    _ => Err(refnet_core::RejectReason::Malformed),
                }
            }
            _ => Err(refnet_core::RejectReason::Malformed),
        };
        stats.record(&parsed);
        out.extend(parsed.ok());
    }
    Ok((out, stats))
}

/// One provider id per line; `#` starts a comment.
pub fn read_exclusion_list(path: &Path) -> Result<BTreeSet<ProviderId>> {
    let text = std::fs::read_to_string(path).map_err(Error::io(path))?;
    Ok(text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(ProviderId::from)
        .collect())
}

/// Construction settings read from a `key = value` file.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConfigFile {
    pub threshold: Option<u64>,
    pub symmetrization: Option<Symmetrization>,
    pub keep_isolated: Option<bool>,
}

pub fn parse_config_file(text: &str) -> Result<ConfigFile> {
    let mut cfg = ConfigFile::default();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = |what: &str| Error::Usage(format!("config line {}: {what}", n + 1));
        let (key, value) = line.split_once('=').ok_or_else(|| bad("expected `key = value`"))?;
        let (key, value) = (key.trim(), value.trim());
        match key {
            "threshold" | "min_shared_patients" => {
                cfg.threshold = Some(value.parse().map_err(|_| bad("threshold must be a positive integer"))?)
            }
            "symmetrization" => {
                cfg.symmetrization = Some(value.parse().map_err(|_| bad("symmetrization must be `sum` or `max`"))?)
            }
            "keep_isolated" => {
                cfg.keep_isolated = Some(match value.to_ascii_lowercase().as_str() {
                    "true" | "yes" | "1" => true,
                    "false" | "no" | "0" => false,
                    _ => return Err(bad("keep_isolated must be true or false")),
                })
            }
            other => return Err(bad(&format!("unknown key `{other}`"))),
        }
    }
    Ok(cfg)
}

pub fn read_config_file(path: &Path) -> Result<ConfigFile> {
    parse_config_file(&std::fs::read_to_string(path).map_err(Error::io(path))?)
}

/// CSV with header `hsa,state,region`.
pub fn read_region_map(path: &Path) -> Result<RegionMap> {
    let mut rdr = csv::Reader::from_path(path).map_err(Error::csv(path))?;
    let header = rdr.headers().map_err(Error::csv(path))?.clone();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h.trim().eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::Data(format!("{}: missing column `{name}`", path.display())))
    };
    let (h, s, r) = (col("hsa")?, col("state")?, col("region")?);
    let mut map = RegionMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(Error::csv(path))?;
        let get = |k: usize| rec.get(k).unwrap_or("");
        map.insert(get(h), get(s), get(r))
            .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    }
    Ok(map)
}

/// Column name to type, as declared by a schema sidecar.
pub fn parse_schema(text: &str, origin: &Path) -> Result<BTreeMap<String, ColumnType>> {
    let raw: BTreeMap<String, String> =
        serde_json::from_str(text).map_err(Error::json(origin))?;
    raw.into_iter()
        .map(|(k, v)| {
            let t = v
                .parse::<ColumnType>()
                .map_err(|e| Error::Data(format!("{}: column `{k}`: {e}", origin.display())))?;
            Ok((k, t))
        })
        .collect()
}

pub(crate) fn parse_cell(raw: &str, ty: ColumnType) -> Option<Cell> {
    if raw.is_empty() {
        return Some(Cell::Absent);
    }
    match ty {
        ColumnType::Text => Some(Cell::Text(raw.to_string())),
        ColumnType::Numeric => match raw.trim().parse::<f64>() {
            Ok(x) if x.is_finite() => Some(Cell::Num(x)),
            _ => None,
        },
    }
}

/// Reads a CSV whose columns are typed by `schema`. Key columns `hsa` and
/// `year` default to text and numeric when the schema leaves them out.
pub fn read_typed_csv<R: Read>(reader: R, schema: &BTreeMap<String, ColumnType>, origin: &Path) -> Result<Frame> {
    let mut rdr = csv::Reader::from_reader(reader);
    let header = rdr.headers().map_err(Error::csv(origin))?.clone();
    let mut columns = Vec::with_capacity(header.len());
    for name in header.iter() {
        let ty = match (schema.get(name), name) {
            (Some(t), _) => *t,
            (None, HSA_COLUMN) => ColumnType::Text,
            (None, YEAR_COLUMN) => ColumnType::Numeric,
            (None, _) => {
                return Err(Error::Data(format!(
                    "{}: column `{name}` is not declared in the schema",
                    origin.display()
                )))
            }
        };
        columns.push((name.to_string(), ty));
    }
    let mut frame = Frame::new(columns.clone()).map_err(|e| Error::Data(format!("{}: {e}", origin.display())))?;
    for (n, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(Error::csv(origin))?;
        let mut row = Vec::with_capacity(columns.len());
        for ((name, ty), raw) in columns.iter().zip(rec.iter()) {
            row.push(parse_cell(raw, *ty).ok_or_else(|| {
                Error::Data(format!(
                    "{}: row {}: `{raw}` in numeric column `{name}` is not a number",
                    origin.display(),
                    n + 2
                ))
            })?);
        }
        frame.push_row(row).map_err(|e| Error::Data(format!("{}: row {}: {e}", origin.display(), n + 2)))?;
    }
    Ok(frame)
}

pub fn metadata_paths(dir: &Path, name: TableName) -> (PathBuf, PathBuf) {
    (
        dir.join(format!("{}.csv", name.as_str())),
        dir.join(format!("{}.schema.json", name.as_str())),
    )
}

/// Loads every `<table>.csv` (with its `<table>.schema.json`) found in `dir`.
pub fn read_metadata_dir(dir: &Path) -> Result<Vec<MetadataTable>> {
    let mut out = Vec::new();
    for name in TableName::ALL {
        let (csv_path, schema_path) = metadata_paths(dir, name);
        if !csv_path.exists() {
            continue;
        }
        let schema_text = std::fs::read_to_string(&schema_path).map_err(Error::io(&schema_path))?;
        let schema = parse_schema(&schema_text, &schema_path)?;
        let file = File::open(&csv_path).map_err(Error::io(&csv_path))?;
        let frame = read_typed_csv(BufReader::new(file), &schema, &csv_path)?;
        if name.is_region_keyed() && !frame.is_empty() {
            for key in [HSA_COLUMN, YEAR_COLUMN] {
                if !frame.has_column(key) {
                    return Err(refnet_core::Error::MissingKeyColumn {
                        table: name.as_str().to_string(),
                        column: key.to_string(),
                    }
                    .into());
                }
            }
        }
        out.push(MetadataTable { name, frame });
    }
    Ok(out)
}
