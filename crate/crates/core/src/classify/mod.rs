//! LDA on CSP features, stratified cross-validation, dimension selection
//! and the train/predict pipeline.

mod lda;
mod pipeline;
mod validation;

pub use lda::{lda_fit, lda_predict, LdaModel, Prediction};
pub use pipeline::{
    predict_pipeline, train_pipeline, CspPipelineModel, CvSummary, PredictionReport,
};
pub use validation::{
    cross_validate, cross_validate_selected, fold_filters, select_q, stratified_folds, CvConfig,
    CvReport, SelectMode, SelectQReport, SelectQRow,
};

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::csp::{
    extract_features, project, standardize_trial, CspFilters, FeatureSpec, FilterOptions, Trial,
};
use crate::distances::DistanceSpec;
use crate::error::Result;

/// Everything that determines how filters and features are computed.
#[derive(Debug, Clone)]
pub struct CspParams {
    pub q: usize,
    pub distance: DistanceSpec,
    pub features: FeatureSpec,
    pub filter: FilterOptions,
}

impl CspParams {
    pub fn new(q: usize, distance: DistanceSpec, features: FeatureSpec) -> Self {
        CspParams {
            q,
            distance,
            features,
            filter: FilterOptions::default(),
        }
    }

    pub fn with_eig_tol(mut self, eig_tol: f64) -> Self {
        self.filter.eig_tol = eig_tol;
        self
    }

    pub(crate) fn validate(&self) -> Result<()> {
        self.distance.validate()
    }
}

impl Default for CspParams {
    fn default() -> Self {
        CspParams::new(15, DistanceSpec::default(), FeatureSpec::default())
    }
}

/// Standardize, project and summarize one raw trial.
pub fn trial_features(x: &Trial, filters: &CspFilters, spec: &FeatureSpec) -> Result<Vec<f64>> {
    let projected = project(&standardize_trial(x)?, filters)?;
    extract_features(&projected, spec)
}

/// Feature rows for many trials, in input order.
pub fn feature_matrix(
    trials: &[&Trial],
    filters: &CspFilters,
    spec: &FeatureSpec,
) -> Result<DMatrix<f64>> {
    let rows = trials
        .par_iter()
        .map(|t| trial_features(t, filters, spec))
        .collect::<Result<Vec<_>>>()?;
    let p = 2 * filters.q() * spec.len();
    Ok(validation::stack(rows, p))
}
