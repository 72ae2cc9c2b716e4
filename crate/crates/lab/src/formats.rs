//! CSV files. Every file starts with the version line [`VERSION_LINE`],
//! followed by a header row.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use pnr_core::simulate::PulseRecord;
use pnr_core::Histogram;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

pub const VERSION_LINE: &str = "# pnr-lab v1";

#[derive(Debug, Serialize, Deserialize)]
struct PulseRow {
    true_incident: u64,
    true_detected: u64,
    area: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct BinRow {
    bin_left: f64,
    bin_right: f64,
    count: u64,
}

/// Shortest text that parses back to `x`, in exponent form when very large
/// or small.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

/// A CSV writer positioned after the version line.
pub fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    let file = File::create(path).map_err(|e| LabError::io(path, e))?;
    let mut out = BufWriter::new(file);
    writeln!(out, "{VERSION_LINE}").map_err(|e| LabError::io(path, e))?;
    Ok(csv::Writer::from_writer(out))
}

/// Flush `w`, turning csv errors into I/O errors against `path`.
pub fn finish(path: &Path, mut w: csv::Writer<BufWriter<File>>) -> Result<()> {
    w.flush().map_err(|e| LabError::io(path, e))
}

pub(crate) fn csv_io(path: &Path, e: csv::Error) -> LabError {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => LabError::io(path, io),
            _ => unreachable!(),
        }
    } else {
        LabError::input(path, e.to_string())
    }
}

pub fn write_pulses(path: &Path, records: &[PulseRecord]) -> Result<()> {
    let mut w = csv_writer(path)?;
    for r in records {
        w.serialize(PulseRow {
            true_incident: r.true_incident,
            true_detected: r.true_detected,
            area: r.area,
        })
        .map_err(|e| csv_io(path, e))?;
    }
    finish(path, w)
}

pub fn write_histogram(path: &Path, hist: &Histogram) -> Result<()> {
    let mut w = csv_writer(path)?;
    for (k, &count) in hist.counts().iter().enumerate() {
        let (bin_left, bin_right) = hist.bin(k);
        w.serialize(BinRow {
            bin_left,
            bin_right,
            count,
        })
        .map_err(|e| csv_io(path, e))?;
    }
    finish(path, w)
}

/// Open `path`, check its version line, and return a reader over the rest
/// whose header must be exactly `columns`.
fn versioned_reader(path: &Path, columns: &[&str]) -> Result<csv::Reader<BufReader<File>>> {
    let file = File::open(path).map_err(|e| LabError::io(path, e))?;
    let mut buf = BufReader::new(file);
    let mut first = String::new();
    buf.read_line(&mut first).map_err(|e| LabError::io(path, e))?;
    if first.trim_end() != VERSION_LINE {
        return Err(LabError::input(
            path,
            format!("line 1: expected `{VERSION_LINE}`, found `{}`", first.trim_end()),
        ));
    }
    let mut reader = csv::Reader::from_reader(buf);
    let header = reader.headers().map_err(|e| csv_io(path, e))?;
    if header.iter().ne(columns.iter().copied()) {
        return Err(LabError::input(
            path,
            format!(
                "line 2: expected columns `{}`, found `{}`",
                columns.join(","),
                header.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }
    Ok(reader)
}

fn rows<T, R>(path: &Path, mut reader: csv::Reader<R>) -> Result<Vec<T>>
where
    T: for<'de> Deserialize<'de>,
    R: Read,
{
    reader
        .deserialize()
        .map(|row| {
            row.map_err(|e| match e.position() {
                // The version line precedes the csv reader's line numbering.
                Some(pos) => LabError::input(path, format!("line {}: {e}", pos.line() + 1)),
                None => csv_io(path, e),
            })
        })
        .collect()
}

pub fn read_pulses(path: &Path) -> Result<Vec<PulseRecord>> {
    let reader = versioned_reader(path, &["true_incident", "true_detected", "area"])?;
    Ok(rows::<PulseRow, _>(path, reader)?
        .into_iter()
        .map(|r| PulseRecord {
            true_incident: r.true_incident,
            true_detected: r.true_detected,
            area: r.area,
        })
        .collect())
}

/// Read a histogram. Bins must be contiguous and increasing.
pub fn read_histogram(path: &Path) -> Result<Histogram> {
    let reader = versioned_reader(path, &["bin_left", "bin_right", "count"])?;
    let bins: Vec<BinRow> = rows(path, reader)?;
    let Some(last) = bins.last() else {
        return Err(LabError::input(path, "histogram has no bins"));
    };
    for (k, pair) in bins.windows(2).enumerate() {
        if pair[0].bin_right != pair[1].bin_left {
            return Err(LabError::input(
                path,
                format!("line {}: bin does not start where the previous one ends", k + 4),
            ));
        }
    }
    let mut edges: Vec<f64> = bins.iter().map(|b| b.bin_left).collect();
    edges.push(last.bin_right);
    let counts = bins.iter().map(|b| b.count).collect();
    Histogram::new(edges, counts).map_err(|e| LabError::input(path, e.to_string()))
}
