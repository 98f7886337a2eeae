use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::csp::{LabeledDataset, Trial};
use crate::error::{Error, Result};

pub const DATASET_FORMAT_VERSION: u32 = 1;

/// JSON manifest describing a dataset stored as one CSV file per trial.
/// Trial paths are relative to the manifest's directory unless absolute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format_version: u32,
    pub labels: [String; 2],
    pub channels: usize,
    /// Samples per trial; 0 when trials differ in length.
    pub samples: usize,
    pub class1: Vec<PathBuf>,
    pub class2: Vec<PathBuf>,
}

impl DatasetManifest {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let manifest: DatasetManifest = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: Some(e.line() as u64),
            message: e.to_string(),
        })?;
        if manifest.format_version != DATASET_FORMAT_VERSION {
            return Err(Error::UnsupportedVersion {
                found: manifest.format_version,
                expected: DATASET_FORMAT_VERSION,
            });
        }
        Ok(manifest)
    }
}

fn parse_error(path: &Path, line: Option<u64>, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// Reads one trial: one signal per line, comma-separated samples, no header.
pub fn read_trial_csv(path: &Path) -> Result<Trial> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(file);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line());
            parse_error(path, line, e.to_string())
        })?;
        let line = record.position().map(|p| p.line());
        let row = record
            .iter()
            .enumerate()
            .map(|(col, cell)| {
                cell.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| {
                        parse_error(
                            path,
                            line,
                            format!("column {}: '{cell}' is not a finite number", col + 1),
                        )
                    })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.len() < 2 {
        return Err(parse_error(
            path,
            None,
            format!("a trial needs at least 2 signal rows, found {}", rows.len()),
        ));
    }
    let t = rows[0].len();
    Trial::new(DMatrix::from_fn(rows.len(), t, |i, j| rows[i][j]))
        .map_err(|e| parse_error(path, None, e.to_string()))
}

/// Writes a trial as CSV with shortest round-trip decimal formatting.
pub fn write_trial_csv(trial: &Trial, path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| csv_io(path, e))?;
    for row in trial.rows() {
        writer
            .write_record(row.iter().map(|v| v.to_string()))
            .map_err(|e| csv_io(path, e))?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

fn csv_io(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => parse_error(path, None, format!("{other:?}")),
    }
}

/// Loads the dataset a manifest describes, in manifest order.
pub fn load_dataset(manifest_path: &Path) -> Result<LabeledDataset> {
    let manifest = DatasetManifest::read(manifest_path)?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let load_class = |paths: &[PathBuf]| -> Result<Vec<Trial>> {
        paths
            .par_iter()
            .map(|p| {
                let full = base.join(p);
                let trial = read_trial_csv(&full)?;
                if trial.channels() != manifest.channels {
                    return Err(parse_error(
                        &full,
                        None,
                        format!(
                            "{} signal rows, the manifest declares {}",
                            trial.channels(),
                            manifest.channels
                        ),
                    ));
                }
                if manifest.samples != 0 && trial.samples() != manifest.samples {
                    return Err(parse_error(
                        &full,
                        None,
                        format!(
                            "{} samples, the manifest declares {}",
                            trial.samples(),
                            manifest.samples
                        ),
                    ));
                }
                Ok(trial)
            })
            .collect()
    };
    let class1 = load_class(&manifest.class1)?;
    let class2 = load_class(&manifest.class2)?;
    let [label1, label2] = manifest.labels;
    LabeledDataset::new(label1, class1, label2, class2)
}

/// Writes `data` under `dir` as `manifest.json` plus one CSV per trial and
/// returns the manifest path.
pub fn save_dataset(data: &LabeledDataset, dir: &Path) -> Result<PathBuf> {
    let mut class_paths: [Vec<PathBuf>; 2] = [Vec::new(), Vec::new()];
    for (k, paths) in class_paths.iter_mut().enumerate() {
        let sub = format!("class{}", k + 1);
        fs::create_dir_all(dir.join(&sub)).map_err(|e| Error::io(dir.join(&sub), e))?;
        for (i, trial) in data.class(k).iter().enumerate() {
            let rel = PathBuf::from(&sub).join(format!("trial_{:04}.csv", i + 1));
            write_trial_csv(trial, &dir.join(&rel))?;
            paths.push(rel);
        }
    }
    let samples = {
        let t = data.class(0)[0].samples();
        if data.iter().all(|(_, x)| x.samples() == t) {
            t
        } else {
            0
        }
    };
    let [class1, class2] = class_paths;
    let manifest = DatasetManifest {
        format_version: DATASET_FORMAT_VERSION,
        labels: data.labels().map(str::to_string),
        channels: data.channels(),
        samples,
        class1,
        class2,
    };
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(path)
}
