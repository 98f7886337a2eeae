//! Dataset and model persistence, feature-table export and the synthetic
//! data generator.

mod dataset;
mod export;
mod model;
mod synthetic;

pub use dataset::{
    load_dataset, read_trial_csv, save_dataset, write_trial_csv, DatasetManifest,
    DATASET_FORMAT_VERSION,
};
pub use export::{export_features, feature_table, FeatureTable};
pub use model::{load_model, model_from_json, model_to_json, save_model, MODEL_FORMAT_VERSION};
pub use synthetic::{generate_synthetic, SyntheticSpec};
