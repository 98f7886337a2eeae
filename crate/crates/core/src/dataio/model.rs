use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::classify::{CspPipelineModel, CvSummary, LdaModel};
use crate::csp::{CspFilters, FeatureSpec};
use crate::distances::DistanceSpec;
use crate::error::{Error, Result};
use crate::linalg::SymMatrix;

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Dense matrix stored row-major with its declared shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct StoredMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl StoredMatrix {
    fn from_matrix(m: &DMatrix<f64>) -> Self {
        StoredMatrix {
            rows: m.nrows(),
            cols: m.ncols(),
            data: m.transpose().as_slice().to_vec(),
        }
    }

    fn into_matrix(self, what: &str) -> Result<DMatrix<f64>> {
        if self.rows.checked_mul(self.cols) != Some(self.data.len()) {
            return Err(Error::CorruptModel(format!(
                "{what} declares {}x{} but holds {} values",
                self.rows,
                self.cols,
                self.data.len()
            )));
        }
        Ok(DMatrix::from_row_slice(self.rows, self.cols, &self.data))
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct StoredLda {
    means: [Vec<f64>; 2],
    pooled_cov: StoredMatrix,
    priors: [f64; 2],
    ridge: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StoredModel {
    format_version: u32,
    labels: [String; 2],
    channels: usize,
    q: usize,
    selected_q: usize,
    distance: DistanceSpec,
    features: FeatureSpec,
    filters: StoredMatrix,
    eigenvalues: Vec<f64>,
    lda: StoredLda,
    cv: Option<CvSummary>,
}

impl StoredModel {
    fn from_model(m: &CspPipelineModel) -> Self {
        let lda = m.lda();
        StoredModel {
            format_version: MODEL_FORMAT_VERSION,
            labels: lda.labels().map(str::to_string),
            channels: m.channels(),
            q: m.filters().q(),
            selected_q: m.selected_q(),
            distance: m.filters().distance().clone(),
            features: m.feature_spec().clone(),
            filters: StoredMatrix::from_matrix(m.filters().weights()),
            eigenvalues: m.filters().eigenvalues().to_vec(),
            lda: StoredLda {
                means: lda.means().clone().map(|v| v.as_slice().to_vec()),
                pooled_cov: StoredMatrix::from_matrix(lda.pooled_cov().as_matrix()),
                priors: lda.priors(),
                ridge: lda.ridge(),
            },
            cv: m.cv().copied(),
        }
    }

    fn into_model(self) -> Result<CspPipelineModel> {
        let w = self.filters.into_matrix("filters")?;
        if w.nrows() != self.channels {
            return Err(Error::CorruptModel(format!(
                "filters have {} rows for {} channels",
                w.nrows(),
                self.channels
            )));
        }
        let filters = CspFilters::from_parts(self.q, w, self.eigenvalues, self.distance)?;
        let cov = self.lda.pooled_cov.into_matrix("pooled covariance")?;
        let cov_sym = SymMatrix::new(cov.clone())?;
        if cov_sym.as_matrix() != &cov {
            return Err(Error::CorruptModel(
                "pooled covariance is not symmetric".into(),
            ));
        }
        let lda = LdaModel::from_parts(
            self.lda.means.map(DVector::from_vec),
            cov_sym,
            self.lda.priors,
            self.labels,
            self.lda.ridge,
        )?;
        CspPipelineModel::from_parts(filters, self.selected_q, self.features, lda, self.cv)
    }
}

/// Serializes a trained pipeline as JSON.
pub fn model_to_json(m: &CspPipelineModel) -> String {
    serde_json::to_string_pretty(&StoredModel::from_model(m)).expect("model serializes") + "\n"
}

/// Parses a model document, checking its version and every invariant of
/// the contained filters and classifier.
pub fn model_from_json(text: &str) -> Result<CspPipelineModel> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::CorruptModel(e.to_string()))?;
    let version = value
        .get("format_version")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| Error::CorruptModel("missing format_version".into()))?;
    if version != u64::from(MODEL_FORMAT_VERSION) {
        return Err(Error::UnsupportedVersion {
            found: u32::try_from(version).unwrap_or(u32::MAX),
            expected: MODEL_FORMAT_VERSION,
        });
    }
    let stored: StoredModel =
        serde_json::from_value(value).map_err(|e| Error::CorruptModel(e.to_string()))?;
    stored.into_model().map_err(|e| match e {
        Error::CorruptModel(_) => e,
        other => Error::CorruptModel(other.to_string()),
    })
}

pub fn save_model(m: &CspPipelineModel, path: &Path) -> Result<()> {
    fs::write(path, model_to_json(m)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<CspPipelineModel> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    model_from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::{train_pipeline, CspParams, CvConfig};
    use crate::dataio::{generate_synthetic, SyntheticSpec};

    fn model() -> CspPipelineModel {
        let data = generate_synthetic(&SyntheticSpec {
            n1: 10,
            n2: 10,
            samples: 60,
            ..SyntheticSpec::default()
        })
        .unwrap();
        let params = CspParams::new(2, DistanceSpec::default(), FeatureSpec::default());
        train_pipeline(&data, &params, 1, &CvConfig::new(3, 1))
            .unwrap()
            .0
    }

    #[test]
    fn json_round_trip_is_exact() {
        let m = model();
        let back = model_from_json(&model_to_json(&m)).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn filters_stored_row_major() {
        let m = model();
        let value: serde_json::Value = serde_json::from_str(&model_to_json(&m)).unwrap();
        assert_eq!(value["filters"]["rows"], 6);
        assert_eq!(value["filters"]["cols"], 4);
        assert_eq!(
            value["filters"]["data"][1].as_f64().unwrap(),
            m.filters().weights()[(0, 1)]
        );
    }

    #[test]
    fn corrupt_documents_are_rejected() {
        let text = model_to_json(&model());
        assert!(matches!(
            model_from_json(&text[..text.len() / 2]),
            Err(Error::CorruptModel(_))
        ));
        let bumped = text.replacen("\"format_version\": 1", "\"format_version\": 2", 1);
        assert!(matches!(
            model_from_json(&bumped),
            Err(Error::UnsupportedVersion { found: 2, .. })
        ));
        let bad_q = text.replacen("\"selected_q\": 1", "\"selected_q\": 5", 1);
        assert!(matches!(
            model_from_json(&bad_q),
            Err(Error::CorruptModel(_))
        ));
        let bad_prior = text.replacen("\"priors\": [\n      0.5", "\"priors\": [\n      1.5", 1);
        assert_ne!(bad_prior, text);
        assert!(matches!(
            model_from_json(&bad_prior),
            Err(Error::CorruptModel(_))
        ));
    }
}
