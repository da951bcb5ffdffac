//! CSV ingestion into a validated [`Dataset`].

use std::collections::BTreeMap;
use std::io::Read;
use std::path::{Path, PathBuf};

use simulband_core::data::DataError;
use simulband_core::{ColumnMapping, Dataset};
use thiserror::Error;

use crate::config::DerivedColumn;

/// Cell values read as missing.
pub const MISSING_TOKENS: [&str; 7] = ["", "NA", "na", "NaN", "nan", ".", "NULL"];

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot open {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("column {0:?} not found in the CSV header")]
    MissingColumn(String),
    #[error("column {column:?}, data row {row}: cannot parse {value:?} as a number")]
    Parse { column: String, row: usize, value: String },
    #[error("action column {column:?}, data row {row}: value {value} is not 0 or 1")]
    NonBinaryAction { column: String, row: usize, value: f64 },
    #[error("no rows left after dropping {dropped} with missing values")]
    EmptyAfterFiltering { dropped: usize },
    #[error(transparent)]
    Data(#[from] DataError),
}

#[derive(Debug, Clone)]
pub struct Ingested {
    pub dataset: Dataset,
    pub rows_read: usize,
    pub dropped: usize,
    pub diagnostics: Vec<String>,
}

pub fn ingest_csv(path: &Path, mapping: &ColumnMapping) -> Result<Ingested, IngestError> {
    ingest_csv_with(path, mapping, &[])
}

pub fn ingest_csv_with(path: &Path, mapping: &ColumnMapping, derive: &[DerivedColumn]) -> Result<Ingested, IngestError> {
    let file = std::fs::File::open(path).map_err(|source| IngestError::Io { path: path.into(), source })?;
    ingest_reader(file, mapping, derive)
}

/// Reads the columns the mapping needs (and the sources of derived
/// columns), drops rows with a missing or non-finite value in any of them
/// and validates the result. Row numbers in errors count data rows from 1.
pub fn ingest_reader<R: Read>(reader: R, mapping: &ColumnMapping, derive: &[DerivedColumn]) -> Result<Ingested, IngestError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();

    let referenced = mapping.referenced();
    let mut needed: Vec<String> = Vec::new();
    for name in &referenced {
        match derive.iter().find(|d| d.name() == name) {
            Some(d) => push_unique(&mut needed, d.source()),
            None => push_unique(&mut needed, name),
        }
    }
    let index: Vec<(String, usize)> = needed
        .iter()
        .map(|name| {
            header
                .iter()
                .position(|h| h == name)
                .map(|i| (name.clone(), i))
                .ok_or_else(|| IngestError::MissingColumn(name.clone()))
        })
        .collect::<Result<_, _>>()?;

    // Each referenced column is either read directly or derived from one
    // source column.
    let sources: Vec<(usize, Option<&DerivedColumn>)> = referenced
        .iter()
        .map(|name| {
            let d = derive.iter().find(|d| d.name() == name);
            let src = d.map_or(name.as_str(), |d| d.source());
            (index.iter().position(|(n, _)| n == src).expect("source indexed"), d)
        })
        .collect();

    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); referenced.len()];
    let mut rows_read = 0;
    let mut dropped = 0;
    let mut first_dropped = Vec::new();
    let mut kept_rows = Vec::new();
    let mut raw = vec![0.0; index.len()];
    let mut row = vec![0.0; referenced.len()];
    for record in rdr.records() {
        let record = record?;
        rows_read += 1;
        let mut missing = false;
        for (slot, (name, i)) in raw.iter_mut().zip(&index) {
            let cell = record.get(*i).unwrap_or("");
            if MISSING_TOKENS.contains(&cell) {
                missing = true;
                break;
            }
            *slot = cell.parse().map_err(|_| IngestError::Parse {
                column: name.clone(),
                row: rows_read,
                value: cell.to_string(),
            })?;
        }
        if !missing {
            for (out, (src, d)) in row.iter_mut().zip(&sources) {
                *out = d.map_or(raw[*src], |d| d.apply(raw[*src]));
            }
            missing = row.iter().any(|v| !v.is_finite());
        }
        if missing {
            dropped += 1;
            if first_dropped.len() < 5 {
                first_dropped.push(rows_read);
            }
            continue;
        }
        kept_rows.push(rows_read);
        for (col, v) in cols.iter_mut().zip(&row) {
            col.push(*v);
        }
    }

    if kept_rows.is_empty() {
        return Err(IngestError::EmptyAfterFiltering { dropped });
    }
    let columns: BTreeMap<String, Vec<f64>> = referenced.iter().cloned().zip(cols).collect();

    let action = &columns[&mapping.action];
    if let Some((pos, &value)) = action.iter().enumerate().find(|(_, &v)| v != 0.0 && v != 1.0) {
        return Err(IngestError::NonBinaryAction {
            column: mapping.action.clone(),
            row: kept_rows[pos],
            value,
        });
    }

    let mut diagnostics = Vec::new();
    if dropped > 0 {
        diagnostics.push(format!(
            "dropped {dropped} of {rows_read} rows with missing values in mapped columns (first: {})",
            first_dropped.iter().map(usize::to_string).collect::<Vec<_>>().join(", ")
        ));
    }
    let dataset = Dataset::new(columns, mapping.clone())?;
    Ok(Ingested { dataset, rows_read, dropped, diagnostics })
}

fn push_unique(v: &mut Vec<String>, s: &str) {
    if !v.iter().any(|x| x == s) {
        v.push(s.to_string());
    }
}

/// Writes the seeded synthetic trial table as CSV.
pub fn write_synthetic(path: &Path, n: usize, seed: u64, confounded: bool) -> anyhow::Result<()> {
    let cols = simulband_core::synthetic::trial_columns(n, seed, confounded);
    let names = simulband_core::synthetic::COLUMNS;
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(names)?;
    for i in 0..n {
        w.write_record(names.iter().map(|c| cols[*c][i].to_string()))?;
    }
    w.flush()?;
    Ok(())
}
