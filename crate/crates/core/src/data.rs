//! In-memory observational dataset with a role mapping for its columns.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DataError {
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("action column `{column}` must be 0 or 1, found {value} at row {row}")]
    NonBinaryAction { column: String, row: usize, value: f64 },
    #[error("column `{column}` has a non-finite value at row {row}")]
    NonFinite { column: String, row: usize },
    #[error("column `{column}` has {found} rows, expected {expected}")]
    LengthMismatch { column: String, expected: usize, found: usize },
    #[error("dataset has no rows")]
    Empty,
}

/// Which columns play which role in an analysis.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ColumnMapping {
    pub action: String,
    #[serde(default)]
    pub outcomes: Vec<String>,
    #[serde(default)]
    pub modifiers: Vec<String>,
    #[serde(default)]
    pub confounders: Vec<String>,
}

impl ColumnMapping {
    /// Every column referenced by the mapping, action first, without duplicates.
    pub fn referenced(&self) -> Vec<String> {
        let mut out = vec![self.action.clone()];
        for c in self.outcomes.iter().chain(&self.modifiers).chain(&self.confounders) {
            if !out.contains(c) {
                out.push(c.clone());
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    columns: BTreeMap<String, Vec<f64>>,
    mapping: ColumnMapping,
    n: usize,
}

impl Dataset {
    /// Validates that every mapped column exists, has finite values and the
    /// common length, and that the action column is binary.
    pub fn new(columns: BTreeMap<String, Vec<f64>>, mapping: ColumnMapping) -> Result<Self, DataError> {
        let action = columns
            .get(&mapping.action)
            .ok_or_else(|| DataError::MissingColumn(mapping.action.clone()))?;
        let n = action.len();
        if n == 0 {
            return Err(DataError::Empty);
        }
        for name in mapping.referenced() {
            let col = columns.get(&name).ok_or_else(|| DataError::MissingColumn(name.clone()))?;
            if col.len() != n {
                return Err(DataError::LengthMismatch { column: name, expected: n, found: col.len() });
            }
            if let Some(row) = col.iter().position(|v| !v.is_finite()) {
                return Err(DataError::NonFinite { column: name, row });
            }
        }
        if let Some((row, &value)) = action.iter().enumerate().find(|(_, &v)| v != 0.0 && v != 1.0) {
            return Err(DataError::NonBinaryAction { column: mapping.action.clone(), row, value });
        }
        Ok(Self { columns, mapping, n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mapping(&self) -> &ColumnMapping {
        &self.mapping
    }

    pub fn column(&self, name: &str) -> Result<&[f64], DataError> {
        let col = self
            .columns
            .get(name)
            .ok_or_else(|| DataError::MissingColumn(name.to_string()))?;
        if !self.mapping.referenced().iter().any(|c| c == name) {
            // Unmapped columns were never validated.
            if let Some(row) = col.iter().position(|v| !v.is_finite()) {
                return Err(DataError::NonFinite { column: name.to_string(), row });
            }
            if col.len() != self.n {
                return Err(DataError::LengthMismatch { column: name.to_string(), expected: self.n, found: col.len() });
            }
        }
        Ok(col)
    }

    pub fn action(&self) -> &[f64] {
        &self.columns[&self.mapping.action]
    }

    pub fn column_names(&self) -> impl Iterator<Item = &str> {
        self.columns.keys().map(String::as_str)
    }
}
