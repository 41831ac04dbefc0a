//! (SMILES, target) CSV datasets.

use crate::graph::Graph;
use crate::smiles::parse_smiles;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed CSV in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("column {column:?} not found in header of {path}")]
    MissingColumn { path: PathBuf, column: String },
    #[error("no usable rows in {0}")]
    EmptyDataset(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub graph: Graph,
    pub target: f64,
    /// Zero-based data row (header excluded).
    pub source_row: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedRow {
    pub row: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub name: String,
    pub records: Vec<Record>,
    #[serde(default)]
    pub skipped: Vec<SkippedRow>,
}

impl Dataset {
    pub fn from_records(name: impl Into<String>, records: Vec<Record>) -> Self {
        Self {
            name: name.into(),
            records,
            skipped: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn targets(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.target).collect()
    }

    pub fn graphs(&self) -> impl Iterator<Item = &Graph> {
        self.records.iter().map(|r| &r.graph)
    }

    /// Records at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            name: self.name.clone(),
            records: indices.iter().map(|&i| self.records[i].clone()).collect(),
            skipped: Vec::new(),
        }
    }
}

/// Turns one raw row into a record, or the reason it is unusable.
pub fn parse_row(smiles: &str, target: &str, row: usize) -> Result<Record, String> {
    let target: f64 = target
        .trim()
        .parse()
        .map_err(|_| format!("target {target:?} is not a number"))?;
    if !target.is_finite() {
        return Err(format!("target {target} is not finite"));
    }
    let graph = parse_smiles(smiles).map_err(|e| format!("SMILES {smiles:?}: {e}"))?;
    if let Some(v) = graph.first_isolated_node() {
        return Err(format!("SMILES {smiles:?}: atom {v} has no bonds"));
    }
    Ok(Record {
        graph,
        target,
        source_row: row,
    })
}

/// Loads a CSV with a header row. Unusable rows (bad SMILES, isolated
/// atoms, non-numeric targets) are skipped and listed in
/// [`Dataset::skipped`].
pub fn load_csv(path: impl AsRef<Path>, smiles_column: &str, target_column: &str) -> Result<Dataset, DatasetError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let csv_err = |source| DatasetError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(file);
    let headers = reader.headers().map_err(csv_err)?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| DatasetError::MissingColumn {
                path: path.to_path_buf(),
                column: name.to_string(),
            })
    };
    let smiles_idx = column(smiles_column)?;
    let target_idx = column(target_column)?;

    let mut records = Vec::new();
    let mut skipped = Vec::new();
    for (row, result) in reader.records().enumerate() {
        let rec = result.map_err(csv_err)?;
        let parsed = match (rec.get(smiles_idx), rec.get(target_idx)) {
            (Some(s), Some(t)) => parse_row(s, t, row),
            _ => Err("row is missing fields".to_string()),
        };
        match parsed {
            Ok(r) => records.push(r),
            Err(reason) => {
                log::warn!("{}: skipping row {row}: {reason}", path.display());
                skipped.push(SkippedRow { row, reason });
            }
        }
    }
    if records.is_empty() {
        return Err(DatasetError::EmptyDataset(path.to_path_buf()));
    }
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(Dataset { name, records, skipped })
}
