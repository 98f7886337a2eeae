//! Common Spatial Patterns (CSP) and distance-based CSP (DB-CSP) for
//! two-class classification of multichannel signal trials.
//!
//! The crate covers the whole workflow: pairwise signal distances
//! ([`distances`]), the symmetric kernels behind the filters ([`linalg`]),
//! filter extraction and feature computation ([`csp`]), LDA with
//! cross-validation ([`classify`]) and persistence ([`dataio`]).

pub mod classify;
pub mod csp;
pub mod dataio;
pub mod distances;
mod error;
pub mod linalg;

pub use classify::{
    cross_validate, lda_fit, lda_predict, predict_pipeline, select_q, stratified_folds,
    train_pipeline, CspParams, CspPipelineModel, CvConfig, CvReport, LdaModel, Prediction,
    PredictionReport, SelectMode, SelectQReport,
};
pub use csp::{
    compute_filters, extract_features, project, standardize_trial, CspFilters, FeatureKind,
    FeatureSpec, LabeledDataset, Trial,
};
pub use distances::{DistanceKind, DistanceSpec};
pub use error::{Error, Result};
pub use linalg::{EigenPairs, SymMatrix};
