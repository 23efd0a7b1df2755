use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use super::config::OutputFormat;
use super::runner::TrialRecord;
use crate::error::{Error, Result};

pub const CSV_COLUMNS: [&str; 9] = [
    "trial",
    "seed",
    "queries",
    "sessions",
    "exact",
    "within_ball",
    "bound",
    "bound_ok",
    "ms",
];

fn csv_error(e: csv::Error) -> io::Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => e,
        other => io::Error::new(io::ErrorKind::InvalidData, format!("{other:?}")),
    }
}

/// Writes records as CSV (header always present) or JSON lines.
pub fn write_records<W: Write>(
    records: &[TrialRecord],
    format: OutputFormat,
    w: W,
) -> io::Result<()> {
    match format {
        OutputFormat::Csv => {
            let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
            wtr.write_record(CSV_COLUMNS).map_err(csv_error)?;
            for r in records {
                wtr.serialize(r).map_err(csv_error)?;
            }
            wtr.flush()
        }
        OutputFormat::Jsonl => write_json_lines(records, w),
    }
}

/// One JSON object per line, each line newline-terminated.
pub fn write_json_lines<T: Serialize, W: Write>(items: &[T], w: W) -> io::Result<()> {
    let mut w = BufWriter::new(w);
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

fn io_at(path: &Path) -> impl FnOnce(io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn emit(records: &[TrialRecord], format: OutputFormat, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(io_at(path))?;
    write_records(records, format, file).map_err(io_at(path))
}

pub fn emit_json_lines<T: Serialize>(items: &[T], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(io_at(path))?;
    write_json_lines(items, file).map_err(io_at(path))
}

/// Parses CSV written by [`write_records`].
pub fn read_csv<R: io::Read>(r: R) -> io::Result<Vec<TrialRecord>> {
    let mut rdr = csv::Reader::from_reader(r);
    rdr.deserialize()
        .map(|row| row.map_err(csv_error))
        .collect()
}
