use std::path::Path;

use crate::classify::trial_features;
use crate::csp::{CspFilters, FeatureSpec, LabeledDataset};
use crate::error::{Error, Result};

/// Per-trial feature rows with their column names and class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    /// Feature column names, `<kind>_<a|b><j>`; the label column is implicit.
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<String>,
}

/// Features of every trial (class 1 first) under the first and last
/// `selected_q` filters.
pub fn feature_table(
    data: &LabeledDataset,
    filters: &CspFilters,
    selected_q: usize,
    spec: &FeatureSpec,
) -> Result<FeatureTable> {
    let selected = filters.select(selected_q)?;
    let names: Vec<String> = (0..selected.weights().ncols())
        .map(|k| selected.column_label(k))
        .collect();
    let columns = spec
        .kinds()
        .iter()
        .flat_map(|kind| names.iter().map(move |n| format!("{kind}_{n}")))
        .collect();
    let mut rows = Vec::with_capacity(data.len());
    let mut labels = Vec::with_capacity(data.len());
    for (class, trial) in data.iter() {
        rows.push(trial_features(trial, &selected, spec)?);
        labels.push(data.label(class).to_string());
    }
    Ok(FeatureTable {
        columns,
        rows,
        labels,
    })
}

impl FeatureTable {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let to_err = |e: csv::Error| Error::Parse {
            path: path.to_path_buf(),
            line: None,
            message: e.to_string(),
        };
        let mut w = csv::Writer::from_path(path).map_err(to_err)?;
        let header = self.columns.iter().map(String::as_str).chain(["label"]);
        w.write_record(header).map_err(to_err)?;
        for (row, label) in self.rows.iter().zip(&self.labels) {
            let record = row.iter().map(|v| v.to_string()).chain([label.clone()]);
            w.write_record(record).map_err(to_err)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Writes the feature table of `data` as CSV with a trailing `label` column.
pub fn export_features(
    data: &LabeledDataset,
    filters: &CspFilters,
    selected_q: usize,
    spec: &FeatureSpec,
    path: &Path,
) -> Result<FeatureTable> {
    let table = feature_table(data, filters, selected_q, spec)?;
    table.write_csv(path)?;
    Ok(table)
}
