use serde::{Deserialize, Serialize};

use super::validation::cross_validate_selected;
use super::{
    feature_matrix, lda_fit, lda_predict, CspParams, CvConfig, CvReport, LdaModel, Prediction,
};
use crate::csp::{compute_filters_with, CspFilters, FeatureSpec, LabeledDataset, Trial};
use crate::error::{Error, Result};

/// Cross-validated accuracy recorded alongside a trained model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvSummary {
    pub mean_acc: f64,
    pub sd_acc: f64,
    pub folds: usize,
}

/// Filters fitted on the full dataset plus an LDA on the features of the
/// first and last `selected_q` filters.
#[derive(Debug, Clone, PartialEq)]
pub struct CspPipelineModel {
    filters: CspFilters,
    selected_q: usize,
    feature_spec: FeatureSpec,
    lda: LdaModel,
    cv: Option<CvSummary>,
}

impl CspPipelineModel {
    pub fn from_parts(
        filters: CspFilters,
        selected_q: usize,
        feature_spec: FeatureSpec,
        lda: LdaModel,
        cv: Option<CvSummary>,
    ) -> Result<Self> {
        if selected_q == 0 || selected_q > filters.q() {
            return Err(Error::InvalidInput(format!(
                "selected q {selected_q} outside 1..={}",
                filters.q()
            )));
        }
        let p = 2 * selected_q * feature_spec.len();
        if lda.dim() != p {
            return Err(Error::DimensionMismatch(format!(
                "LDA expects {} features, the pipeline produces {p}",
                lda.dim()
            )));
        }
        if let Some(cv) = &cv {
            if !(0.0..=1.0).contains(&cv.mean_acc) {
                return Err(Error::InvalidInput(format!(
                    "cross-validated accuracy {} outside [0, 1]",
                    cv.mean_acc
                )));
            }
        }
        Ok(CspPipelineModel {
            filters,
            selected_q,
            feature_spec,
            lda,
            cv,
        })
    }

    pub fn filters(&self) -> &CspFilters {
        &self.filters
    }

    pub fn selected_q(&self) -> usize {
        self.selected_q
    }

    pub fn feature_spec(&self) -> &FeatureSpec {
        &self.feature_spec
    }

    pub fn lda(&self) -> &LdaModel {
        &self.lda
    }

    pub fn cv(&self) -> Option<&CvSummary> {
        self.cv.as_ref()
    }

    pub fn labels(&self) -> [&str; 2] {
        self.lda.labels()
    }

    pub fn channels(&self) -> usize {
        self.filters.channels()
    }

    /// The filter columns the classifier actually uses.
    pub fn active_filters(&self) -> CspFilters {
        self.filters
            .select(self.selected_q)
            .expect("selected_q validated at construction")
    }
}

/// Fits filters of dimension `params.q` on all trials and an LDA on the
/// features of the first and last `selected_q` of them. The returned
/// report is the k-fold accuracy of the same configuration.
pub fn train_pipeline(
    data: &LabeledDataset,
    params: &CspParams,
    selected_q: usize,
    cfg: &CvConfig,
) -> Result<(CspPipelineModel, CvReport)> {
    let report = cross_validate_selected(data, params, Some(selected_q), cfg)?;
    let filters = compute_filters_with(
        data.class(0),
        data.class(1),
        params.q,
        &params.distance,
        &params.filter,
    )?;
    let selected = filters.select(selected_q)?;
    let trials: Vec<&Trial> = data.iter().map(|(_, t)| t).collect();
    let x = feature_matrix(&trials, &selected, &params.features)?;
    let lda = lda_fit(&x, &data.targets(), data.labels())?;
    let cv = CvSummary {
        mean_acc: report.mean_acc,
        sd_acc: report.sd_acc,
        folds: cfg.folds,
    };
    let model =
        CspPipelineModel::from_parts(filters, selected_q, params.features.clone(), lda, Some(cv))?;
    Ok((model, report))
}

/// Predicted labels for new trials, plus accuracy when targets are known.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictionReport {
    pub labels: Vec<String>,
    #[serde(skip)]
    pub predictions: Vec<Prediction>,
    pub accuracy: Option<f64>,
}

/// Classifies raw trials: standardize, project, extract features, LDA.
pub fn predict_pipeline(
    m: &CspPipelineModel,
    trials: &[Trial],
    true_targets: Option<&[String]>,
) -> Result<PredictionReport> {
    let known = m.labels();
    let target_classes = match true_targets {
        Some(targets) => {
            if targets.len() != trials.len() {
                return Err(Error::DimensionMismatch(format!(
                    "{} targets for {} trials",
                    targets.len(),
                    trials.len()
                )));
            }
            let classes = targets
                .iter()
                .map(|t| {
                    known.iter().position(|k| k == t).ok_or_else(|| {
                        Error::LabelMismatch(format!(
                            "target '{t}' is not one of the model labels {known:?}"
                        ))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Some(classes)
        }
        None => None,
    };
    if let Some(i) = trials.iter().position(|t| t.channels() != m.channels()) {
        return Err(Error::DimensionMismatch(format!(
            "trial {} has {} signals, the model expects {}",
            i + 1,
            trials[i].channels(),
            m.channels()
        )));
    }
    let refs: Vec<&Trial> = trials.iter().collect();
    let x = feature_matrix(&refs, &m.active_filters(), &m.feature_spec)?;
    let predictions = lda_predict(&m.lda, &x)?;
    let labels = predictions
        .iter()
        .map(|p| m.lda.label(p.class).to_string())
        .collect();
    let accuracy = target_classes.filter(|c| !c.is_empty()).map(|classes| {
        let hits = predictions
            .iter()
            .zip(&classes)
            .filter(|(p, &c)| p.class == c)
            .count();
        hits as f64 / classes.len() as f64
    });
    Ok(PredictionReport {
        labels,
        predictions,
        accuracy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distances::DistanceSpec;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn dataset(c: usize) -> LabeledDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut make = |boost: usize| -> Trial {
            Trial::new(DMatrix::from_fn(c, 80, |i, _| {
                let z: f64 = rng.sample(StandardNormal);
                if i == boost {
                    4.0 * z
                } else {
                    z
                }
            }))
            .unwrap()
        };
        let c1 = (0..15).map(|_| make(0)).collect();
        let c2 = (0..15).map(|_| make(1)).collect();
        LabeledDataset::new("C1", c1, "C2", c2).unwrap()
    }

    #[test]
    fn resubstitution_on_separable_data() {
        let data = dataset(6);
        let params = CspParams::new(3, DistanceSpec::default(), FeatureSpec::default());
        let (model, report) = train_pipeline(&data, &params, 3, &CvConfig::new(5, 1)).unwrap();
        assert_eq!(model.lda().dim(), 6);
        assert!(report.mean_acc >= 0.95);
        let trials: Vec<Trial> = data.iter().map(|(_, t)| t.clone()).collect();
        let targets: Vec<String> = data
            .iter()
            .map(|(k, _)| data.label(k).to_string())
            .collect();
        let out = predict_pipeline(&model, &trials, Some(&targets)).unwrap();
        assert_eq!(out.accuracy, Some(1.0));
        assert_eq!(model.cv().unwrap().mean_acc, report.mean_acc);
    }

    #[test]
    fn selected_q_sets_feature_dimension() {
        let data = dataset(6);
        let params = CspParams::new(3, DistanceSpec::default(), FeatureSpec::default());
        let (model, _) = train_pipeline(&data, &params, 2, &CvConfig::new(3, 1)).unwrap();
        assert_eq!(model.lda().dim(), 4);
        assert_eq!(model.filters().q(), 3);
        assert!(train_pipeline(&data, &params, 4, &CvConfig::new(3, 1)).is_err());
    }

    #[test]
    fn first_five_of_class_one() {
        let data = dataset(4);
        let params = CspParams::new(1, DistanceSpec::default(), FeatureSpec::default());
        let (model, _) = train_pipeline(&data, &params, 1, &CvConfig::new(5, 3)).unwrap();
        let test: Vec<Trial> = data.class(0)[..5].to_vec();
        let targets = vec!["C1".to_string(); 5];
        let out = predict_pipeline(&model, &test, Some(&targets)).unwrap();
        assert_eq!(out.accuracy, Some(1.0));
        assert!(out.labels.iter().all(|l| l == "C1"));

        let empty = predict_pipeline(&model, &[], None).unwrap();
        assert!(empty.labels.is_empty());

        let bad = vec!["C3".to_string(); 5];
        assert!(matches!(
            predict_pipeline(&model, &test, Some(&bad)),
            Err(Error::LabelMismatch(_))
        ));
        let narrow = Trial::new(DMatrix::from_element(3, 10, 1.0)).unwrap();
        assert!(matches!(
            predict_pipeline(&model, &[narrow], None),
            Err(Error::DimensionMismatch(_))
        ));
    }
}
