//! Single-file SQLite export of the feature table and its companions.

use std::{fs, path::Path};

use refnet_core::{
    analytics::{HSA_COLUMN, YEAR_COLUMN},
    record::PRIVACY_MIN_SHARED_PATIENTS,
    Cell, ColumnType, Frame, MetadataTable, TableName,
};
use rusqlite::{params_from_iter, types::Value, Connection, OpenFlags};

use crate::{
    bundle::GraphBundle,
    error::{Error, Result},
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SqlType {
    Integer,
    Real,
    Text,
}

impl SqlType {
    fn as_str(self) -> &'static str {
        match self {
            Self::Integer => "INTEGER",
            Self::Real => "REAL",
            Self::Text => "TEXT",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SqlTable {
    pub name: String,
    pub columns: Vec<(String, SqlType)>,
    pub rows: Vec<Vec<Cell>>,
}

/// Numeric columns holding counts or years are stored as integers.
fn numeric_type(column: &str) -> SqlType {
    let integral = column == YEAR_COLUMN
        || column.ends_with("_count")
        || column == "shared_patients";
    if integral {
        SqlType::Integer
    } else {
        SqlType::Real
    }
}

pub fn sql_type(column: &str, ty: ColumnType) -> SqlType {
    match ty {
        ColumnType::Text => SqlType::Text,
        ColumnType::Numeric => numeric_type(column),
    }
}

impl SqlTable {
    pub fn from_frame(name: &str, frame: &Frame) -> Self {
        Self {
            name: name.to_string(),
            columns: frame
                .columns()
                .iter()
                .map(|(c, t)| (c.clone(), sql_type(c, *t)))
                .collect(),
            rows: frame.rows().to_vec(),
        }
    }

    /// Empty table with the columns used when no input was supplied.
    pub fn empty(name: &str) -> Self {
        let text = |c: &str| (c.to_string(), SqlType::Text);
        let int = |c: &str| (c.to_string(), SqlType::Integer);
        let columns = match name {
            TableName::INTERACTIONS => vec![
                text(HSA_COLUMN),
                int(YEAR_COLUMN),
                text("npi_a"),
                text("npi_b"),
                int("shared_patients"),
            ],
            n if n == TableName::HospitalAtlasData.as_str() => {
                vec![text("provider_id"), text(HSA_COLUMN), int(YEAR_COLUMN)]
            }
            _ => vec![text(HSA_COLUMN), int(YEAR_COLUMN)],
        };
        Self {
            name: name.to_string(),
            columns,
            rows: Vec::new(),
        }
    }

    fn create_sql(&self) -> String {
        let cols: Vec<String> = self
            .columns
            .iter()
            .map(|(c, t)| format!("{} {}", quote(c), t.as_str()))
            .collect();
        format!("CREATE TABLE {} ({})", quote(&self.name), cols.join(", "))
    }
}

fn quote(ident: &str) -> String {
    format!("\"{}\"", ident.replace('"', "\"\""))
}

/// Retained edges of every network, re-filtered at the privacy floor.
pub fn interactions_table(bundles: &[GraphBundle]) -> SqlTable {
    let mut t = SqlTable::empty(TableName::INTERACTIONS);
    for b in bundles {
        let g = &b.graph;
        for (&(i, j), &w) in g.edges().iter().zip(g.weights()) {
            if w < PRIVACY_MIN_SHARED_PATIENTS {
                continue;
            }
            t.rows.push(vec![
                Cell::Text(g.key().hsa.clone()),
                Cell::Num(g.key().year as f64),
                Cell::Text(g.node_ids()[i].to_string()),
                Cell::Text(g.node_ids()[j].to_string()),
                Cell::Num(w as f64),
            ]);
        }
    }
    t
}

/// The seven tables in export order: the feature table, the five metadata
/// tables, then the interaction table.
pub fn export_tables(features: &Frame, metadata: &[MetadataTable], interactions: Option<SqlTable>) -> Vec<SqlTable> {
    let mut out = vec![SqlTable::from_frame(TableName::FEATURES, features)];
    let mut names: Vec<TableName> = TableName::ALL.to_vec();
    names.sort_by_key(|n| n.as_str());
    for name in names {
        out.push(match metadata.iter().find(|t| t.name == name) {
            Some(t) if !t.frame.columns().is_empty() => SqlTable::from_frame(name.as_str(), &t.frame),
            _ => SqlTable::empty(name.as_str()),
        });
    }
    out.push(interactions.unwrap_or_else(|| SqlTable::empty(TableName::INTERACTIONS)));
    out
}

fn sql_value(cell: &Cell, ty: SqlType) -> Value {
    match (cell, ty) {
        (Cell::Absent, _) => Value::Null,
        (Cell::Text(s), _) => Value::Text(s.clone()),
        (Cell::Num(x), SqlType::Integer) if x.trunc() == *x && x.abs() < 9.0e15 => Value::Integer(*x as i64),
        (Cell::Num(x), _) => Value::Real(*x),
    }
}

/// Refuses to replace a file that is not an earlier export with the same
/// table definitions.
fn check_existing(path: &Path, tables: &[SqlTable]) -> Result<()> {
    if !path.exists() {
        return Ok(());
    }
    let conflict = |why: String| Error::Data(format!("{}: schema conflict: {why}", path.display()));
    let conn = Connection::open_with_flags(path, OpenFlags::SQLITE_OPEN_READ_ONLY)
        .map_err(|e| conflict(e.to_string()))?;
    let mut stmt = conn
        .prepare("SELECT name, sql FROM sqlite_master WHERE type = 'table' ORDER BY name")
        .map_err(|e| conflict(e.to_string()))?;
    let existing = stmt
        .query_map([], |r| Ok((r.get::<_, String>(0)?, r.get::<_, Option<String>>(1)?)))
        .and_then(|rows| rows.collect::<rusqlite::Result<Vec<_>>>())
        .map_err(|e| conflict(e.to_string()))?;
    for (name, sql) in existing {
        match tables.iter().find(|t| t.name == name) {
            None => return Err(conflict(format!("unexpected table `{name}`"))),
            Some(t) if sql.as_deref() != Some(t.create_sql().as_str()) => {
                return Err(conflict(format!("table `{name}` has a different definition")))
            }
            Some(_) => {}
        }
    }
    Ok(())
}

/// Writes `tables` to a fresh database at `path`. Returns row counts.
pub fn write_sqldb(path: &Path, tables: &[SqlTable]) -> Result<Vec<(String, usize)>> {
    check_existing(path, tables)?;
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(Error::io(parent))?;
    }
    let tmp = path.with_extension("sqlite.tmp");
    if tmp.exists() {
        fs::remove_file(&tmp).map_err(Error::io(&tmp))?;
    }
    {
        let mut conn = Connection::open(&tmp)?;
        conn.execute_batch("PRAGMA journal_mode = OFF; PRAGMA synchronous = OFF;")?;
        let tx = conn.transaction()?;
        for t in tables {
            tx.execute(&t.create_sql(), [])?;
            let marks = vec!["?"; t.columns.len()].join(", ");
            let mut stmt = tx.prepare(&format!("INSERT INTO {} VALUES ({marks})", quote(&t.name)))?;
            for row in &t.rows {
                let values = row.iter().zip(&t.columns).map(|(c, (_, ty))| sql_value(c, *ty));
                stmt.execute(params_from_iter(values))?;
            }
        }
        tx.commit()?;
        conn.close().map_err(|(_, e)| e)?;
    }
    fs::rename(&tmp, path).map_err(Error::io(path))?;
    Ok(tables.iter().map(|t| (t.name.clone(), t.rows.len())).collect())
}

/// Row count of each table in an existing database, in name order.
pub fn table_row_counts(path: &Path) -> Result<Vec<(String, usize)>> {
    let conn = Connection::open_with_flags(path, OpenFlags::SQLITE_OPEN_READ_ONLY)?;
    let names: Vec<String> = conn
        .prepare("SELECT name FROM sqlite_master WHERE type = 'table' ORDER BY name")?
        .query_map([], |r| r.get(0))?
        .collect::<rusqlite::Result<_>>()?;
    names
        .into_iter()
        .map(|n| {
            let c: i64 = conn.query_row(&format!("SELECT COUNT(*) FROM {}", quote(&n)), [], |r| r.get(0))?;
            Ok((n, c as usize))
        })
        .collect()
}
