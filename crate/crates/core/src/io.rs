//! File formats shared with the command-line tool.
//!
//! Tables are stored in long CSV form, one line per cell:
//! `setting_id,outcome,count` for raw counts and
//! `setting_id,outcome,probability` for probability tables. Indices are
//! zero-based; missing cells read as zero.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tomo::CountTable;

#[derive(Debug, Serialize, Deserialize)]
struct CountRecord {
    setting_id: usize,
    outcome: usize,
    count: u64,
}

#[derive(Debug, Serialize, Deserialize)]
struct ProbabilityRecord {
    setting_id: usize,
    outcome: usize,
    probability: f64,
}

fn csv_error(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

/// Places `(row, col, value)` cells into a dense table, rejecting repeats.
fn densify<T: Copy + Default>(cells: Vec<(usize, usize, T)>, what: &str) -> Result<Vec<Vec<T>>> {
    if cells.is_empty() {
        return Err(Error::EmptyCounts(format!("{what} has no rows")));
    }
    let rows = cells.iter().map(|c| c.0).max().unwrap_or(0) + 1;
    let cols = cells.iter().map(|c| c.1).max().unwrap_or(0) + 1;
    let mut out = vec![vec![T::default(); cols]; rows];
    let mut seen = vec![vec![false; cols]; rows];
    for (r, c, v) in cells {
        if std::mem::replace(&mut seen[r][c], true) {
            return Err(Error::Parse(format!("{what}: duplicate cell ({r}, {c})")));
        }
        out[r][c] = v;
    }
    Ok(out)
}

pub fn read_counts_csv<R: Read>(reader: R) -> Result<CountTable> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let cells = rdr
        .deserialize::<CountRecord>()
        .map(|r| r.map(|r| (r.setting_id, r.outcome, r.count)).map_err(csv_error))
        .collect::<Result<Vec<_>>>()?;
    CountTable::new(densify(cells, "count table")?)
}

pub fn write_counts_csv<W: Write>(writer: W, table: &CountTable) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for (s, row) in table.counts.iter().enumerate() {
        for (o, &count) in row.iter().enumerate() {
            w.serialize(CountRecord {
                setting_id: s,
                outcome: o,
                count,
            })
            .map_err(csv_error)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads `table[setting][outcome]`; entries must be finite and in `[0, 1]`.
pub fn read_probability_csv<R: Read>(reader: R) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let cells = rdr
        .deserialize::<ProbabilityRecord>()
        .map(|r| r.map(|r| (r.setting_id, r.outcome, r.probability)).map_err(csv_error))
        .collect::<Result<Vec<_>>>()?;
    if let Some(c) = cells.iter().find(|c| !(0.0..=1.0).contains(&c.2)) {
        return Err(Error::Parse(format!("probability {} at ({}, {}) outside [0, 1]", c.2, c.0, c.1)));
    }
    densify(cells, "probability table")
}

pub fn write_probability_csv<W: Write>(writer: W, table: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for (s, row) in table.iter().enumerate() {
        for (o, &probability) in row.iter().enumerate() {
            w.serialize(ProbabilityRecord {
                setting_id: s,
                outcome: o,
                probability,
            })
            .map_err(csv_error)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes a header line and rows of numbers.
pub fn write_columns_csv<W: Write>(writer: W, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(header).map_err(csv_error)?;
    for r in rows {
        if r.len() != header.len() {
            return Err(Error::DimensionMismatch(format!("{} values for {} columns", r.len(), header.len())));
        }
        w.write_record(r.iter().map(|v| format!("{v}"))).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)?)
}

pub fn from_json<T: for<'de> Deserialize<'de>>(s: &str) -> Result<T> {
    Ok(serde_json::from_str(s)?)
}
