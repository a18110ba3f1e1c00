//! CSV time-series interchange.
//!
//! Format: UTF-8, mandatory header row, comma separator, `.` decimal point,
//! one row per time sample. A leading column named exactly `t` is treated as
//! the time stamp. LF and CRLF line endings are accepted; LF is written.
//! Numbers are written with 17 significant digits so that every `f64`
//! survives a round trip unchanged.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::dictionary::median;
use crate::error::{Error, Result};
use crate::koopman::SnapshotPair;
use crate::linalg::DenseMatrix;

/// Name of the optional leading time column.
pub const TIME_COLUMN: &str = "t";

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesTable {
    pub column_names: Vec<String>,
    /// `T x n_vars`, one row per sample.
    pub samples: DenseMatrix,
    /// Median spacing of the `t` column, when there was one with ≥ 2 rows.
    pub dt_hint: Option<f64>,
    /// The `t` column itself, if present.
    pub times: Option<Vec<f64>>,
}

impl TimeSeriesTable {
    pub fn new(column_names: Vec<String>, samples: DenseMatrix) -> Result<Self> {
        if column_names.len() != samples.cols() {
            return Err(Error::Shape(format!(
                "{} column names for {} columns",
                column_names.len(),
                samples.cols()
            )));
        }
        samples.ensure_finite("time-series samples")?;
        Ok(TimeSeriesTable {
            column_names,
            samples,
            dt_hint: None,
            times: None,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.samples.rows()
    }

    pub fn n_vars(&self) -> usize {
        self.samples.cols()
    }

    /// Snapshot pairs from rows `start..start + length` (state per column).
    pub fn to_snapshots(&self, start: usize, length: usize) -> Result<SnapshotPair> {
        to_snapshots(self, start, length)
    }
}

/// Reads a CSV file into a [`TimeSeriesTable`].
pub fn read_csv(path: impl AsRef<Path>) -> Result<TimeSeriesTable> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv_from(file, path)
}

/// Reads CSV text from any reader; `origin` is only used in error messages.
pub fn read_csv_from(reader: impl std::io::Read, origin: &Path) -> Result<TimeSeriesTable> {
    let parse_err = |line: usize, column: usize, message: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        column,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut records = rdr.records();
    let header = match records.next() {
        None => return Err(parse_err(1, 1, "file is empty".into())),
        Some(r) => r.map_err(|e| parse_err(1, 1, e.to_string()))?,
    };
    let names: Vec<String> = header.iter().map(str::to_owned).collect();
    if names.iter().all(|n| n.is_empty()) {
        return Err(parse_err(1, 1, "header row is empty".into()));
    }
    if names.iter().all(|n| n.parse::<f64>().is_ok()) {
        return Err(parse_err(1, 1, "missing header row (first row is numeric)".into()));
    }
    if let Some(i) = names.iter().position(|n| n.is_empty()) {
        return Err(parse_err(1, i + 1, "empty column name".into()));
    }

    let width = names.len();
    let mut data = Vec::new();
    let mut n_rows = 0usize;
    for (idx, rec) in records.enumerate() {
        let line = idx + 2;
        let rec = rec.map_err(|e| parse_err(line, 1, e.to_string()))?;
        if rec.len() == 1 && rec.get(0) == Some("") {
            // Blank line.
            continue;
        }
        if rec.len() != width {
            return Err(parse_err(
                line,
                rec.len().min(width) + 1,
                format!("expected {width} fields, found {}", rec.len()),
            ));
        }
        for (c, cell) in rec.iter().enumerate() {
            let v: f64 = cell
                .parse()
                .map_err(|_| parse_err(line, c + 1, format!("not a number: {cell:?}")))?;
            if !v.is_finite() {
                return Err(parse_err(line, c + 1, format!("non-finite value {cell:?}")));
            }
            data.push(v);
        }
        n_rows += 1;
    }

    let all = DenseMatrix::from_row_major(n_rows, width, data)?;
    if names[0] != TIME_COLUMN {
        return Ok(TimeSeriesTable {
            column_names: names,
            samples: all,
            dt_hint: None,
            times: None,
        });
    }

    let times = all.column(0);
    for (i, w) in times.windows(2).enumerate() {
        if !(w[1] > w[0]) {
            return Err(parse_err(
                i + 3,
                1,
                format!("time column is not strictly increasing ({} then {})", w[0], w[1]),
            ));
        }
    }
    let dt_hint = if times.len() >= 2 {
        let mut diffs: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).collect();
        Some(median(&mut diffs))
    } else {
        None
    };
    Ok(TimeSeriesTable {
        column_names: names[1..].to_vec(),
        samples: all.columns(1, width),
        dt_hint,
        times: Some(times),
    })
}

/// Writes `samples` (one row per line) under the given header.
pub fn write_csv(path: impl AsRef<Path>, column_names: &[impl AsRef<str>], samples: &DenseMatrix) -> Result<()> {
    if column_names.len() != samples.cols() {
        return Err(Error::Shape(format!(
            "{} column names for {} columns",
            column_names.len(),
            samples.cols()
        )));
    }
    let path = path.as_ref();
    let io = |e| Error::io(path, e);
    let mut out = BufWriter::new(File::create(path).map_err(io)?);
    write_csv_to(&mut out, column_names, samples).map_err(io)?;
    out.flush().map_err(io)
}

pub(crate) fn write_csv_to(
    out: &mut impl Write,
    column_names: &[impl AsRef<str>],
    samples: &DenseMatrix,
) -> std::io::Result<()> {
    let header: Vec<&str> = column_names.iter().map(AsRef::as_ref).collect();
    writeln!(out, "{}", header.join(","))?;
    let mut line = String::new();
    for i in 0..samples.rows() {
        line.clear();
        for (j, v) in samples.row(i).iter().enumerate() {
            if j > 0 {
                line.push(',');
            }
            line.push_str(&format_f64(*v));
        }
        line.push('\n');
        out.write_all(line.as_bytes())?;
    }
    Ok(())
}

/// Writes a table, restoring its `t` column when it has one.
pub fn write_table(path: impl AsRef<Path>, table: &TimeSeriesTable) -> Result<()> {
    match &table.times {
        None => write_csv(path, &table.column_names, &table.samples),
        Some(times) => {
            let t = DenseMatrix::column_vector(times)?;
            let all = t.hstack(&table.samples)?;
            let mut names = vec![TIME_COLUMN.to_string()];
            names.extend(table.column_names.iter().cloned());
            write_csv(path, &names, &all)
        }
    }
}

/// 17 significant digits in scientific notation.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Transposes rows `start..start + length` into consecutive snapshot pairs.
pub fn to_snapshots(table: &TimeSeriesTable, start: usize, length: usize) -> Result<SnapshotPair> {
    if length < 2 {
        return Err(Error::Parameter(format!(
            "a snapshot window needs at least 2 rows, got {length}"
        )));
    }
    let end = start.checked_add(length).unwrap_or(usize::MAX);
    if end > table.n_rows() {
        return Err(Error::Bounds(format!(
            "window {start}..{end} exceeds the {} rows of the table",
            table.n_rows()
        )));
    }
    let window = table.samples.row_range(start, end).transpose();
    SnapshotPair::from_trajectory(&window)
}
