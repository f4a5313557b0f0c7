//! CSV serialization of typed frames.

use std::{collections::BTreeMap, io::Write, path::Path};

use refnet_core::{Cell, ColumnType, Frame};

use crate::{
    error::{Error, Result},
    ingest::read_typed_csv,
};

/// Shortest text that parses back to the same `f64`. Integral values print
/// without a fractional part.
pub fn format_number(x: f64) -> String {
    if x == x.trunc() && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else if x != 0.0 && (x.abs() < 1e-5 || x.abs() >= 1e15) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

pub fn cell_text(cell: &Cell) -> String {
    match cell {
        Cell::Num(x) => format_number(*x),
        Cell::Text(s) => s.clone(),
        Cell::Absent => String::new(),
    }
}

/// RFC 4180 CSV with a header row; absent cells become empty fields.
pub fn write_frame_csv<W: Write>(frame: &Frame, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(out);
    let wrap = |e: csv::Error| Error::Internal(format!("csv write: {e}"));
    w.write_record(frame.column_names()).map_err(wrap)?;
    for row in frame.rows() {
        w.write_record(row.iter().map(cell_text)).map_err(wrap)?;
    }
    w.flush().map_err(|e| Error::Internal(format!("csv write: {e}")))?;
    Ok(())
}

pub fn frame_csv_bytes(frame: &Frame) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_frame_csv(frame, &mut buf)?;
    Ok(buf)
}

/// Reads a CSV written by [`write_frame_csv`] back with the given column types.
pub fn read_frame_csv(path: &Path, columns: &[(String, ColumnType)]) -> Result<Frame> {
    let file = std::fs::File::open(path).map_err(Error::io(path))?;
    let schema: BTreeMap<String, ColumnType> = columns.iter().cloned().collect();
    let frame = read_typed_csv(std::io::BufReader::new(file), &schema, path)?;
    let expected: Vec<&str> = columns.iter().map(|c| c.0.as_str()).collect();
    let found: Vec<&str> = frame.column_names().collect();
    if expected != found {
        return Err(Error::Data(format!(
            "{}: expected columns {expected:?}, found {found:?}",
            path.display()
        )));
    }
    Ok(frame)
}
