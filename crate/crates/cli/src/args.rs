use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use dbcsp_core::csp::FeatureSpec;
use dbcsp_core::distances::{DistanceKind, DistanceSpec};

#[derive(Debug, Parser)]
#[command(
    name = "dbcsp",
    version,
    about = "CSP and distance-based CSP for two-class signal classification"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a seeded synthetic dataset (manifest + CSV trials).
    Generate(GenerateArgs),
    /// Summarize a dataset and, optionally, a trained model.
    Info(InfoArgs),
    /// Score a grid of dimensions q by holdout or cross-validation.
    #[command(name = "select-q")]
    SelectQ(SelectQArgs),
    /// Fit filters and LDA on a dataset and save the model.
    Fit(FitArgs),
    /// Cross-validate the pipeline on a dataset.
    Evaluate(EvaluateArgs),
    /// Classify trials with a saved model.
    Predict(PredictArgs),
    /// Plot one trial before and after projection (SVG).
    Plot(PlotArgs),
    /// Boxplots of projected (log-)variances per class (SVG).
    Boxplot(BoxplotArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Output directory; receives manifest.json and per-class CSV folders.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 6)]
    pub channels: usize,
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    #[arg(long, default_value_t = 30)]
    pub n1: usize,
    #[arg(long, default_value_t = 30)]
    pub n2: usize,
    #[arg(long, default_value_t = 10.0)]
    pub variance_ratio: f64,
    #[arg(long, default_value_t = 0.1)]
    pub noise_sd: f64,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Class labels, comma-separated.
    #[arg(long, default_value = "C1,C2")]
    pub labels: String,
}

/// Distance and filter options shared by every command that fits filters.
#[derive(Debug, Args, Clone)]
pub struct CspArgs {
    /// Number of leading and trailing eigenvectors kept.
    #[arg(long, default_value_t = 15)]
    pub q: usize,
    /// Signal distance: eucl, dtw or infnorm.
    #[arg(long, default_value = "EUCL")]
    pub distance: String,
    /// Mix the distance with the Euclidean one.
    #[arg(long)]
    pub mixture: bool,
    /// Euclidean weight of the mixture.
    #[arg(long, default_value_t = 0.5)]
    pub w: f64,
    /// Feature kinds, comma-separated: log_variance, variance, max, min, iqr.
    #[arg(long, default_value = "log_variance")]
    pub features: String,
    /// Eigenvalue tolerance for positive-definite repair.
    #[arg(long, default_value_t = 1e-6)]
    pub eig_tol: f64,
}

impl CspArgs {
    pub fn distance_spec(&self) -> dbcsp_core::Result<DistanceSpec> {
        let kind: DistanceKind = self.distance.parse()?;
        let spec = DistanceSpec {
            kind,
            mixture: self.mixture,
            w: self.w,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn feature_spec(&self) -> dbcsp_core::Result<FeatureSpec> {
        self.features.parse()
    }
}

#[derive(Debug, Args, Clone, Copy)]
pub struct CvArgs {
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
    /// Seed for fold assignment; drawn at random when absent.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct InfoArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, default_value_t = 15)]
    pub q: usize,
    #[arg(long, default_value = "EUCL")]
    pub distance: String,
    #[arg(long)]
    pub mixture: bool,
    #[arg(long, default_value_t = 0.5)]
    pub w: f64,
    /// JSON report path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SelectQArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// Dimensions to try, comma-separated.
    #[arg(long, default_value = "1,2,3,5,10,15")]
    pub grid: String,
    #[command(flatten)]
    pub csp: CspArgs,
    /// Cross-validate instead of a single holdout split.
    #[arg(long)]
    pub cv: bool,
    #[command(flatten)]
    pub cv_args: CvArgs,
    /// Training fraction for the holdout split.
    #[arg(long, default_value_t = 0.75)]
    pub train_size: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// Where to write the trained model.
    #[arg(long)]
    pub model: PathBuf,
    /// Pairs of filters fed to the classifier; defaults to q.
    #[arg(long)]
    pub selected_q: Option<usize>,
    #[command(flatten)]
    pub csp: CspArgs,
    #[command(flatten)]
    pub cv_args: CvArgs,
    /// Also write the per-trial feature table as CSV.
    #[arg(long)]
    pub export_features: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub selected_q: Option<usize>,
    #[command(flatten)]
    pub csp: CspArgs,
    #[command(flatten)]
    pub cv_args: CvArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Dataset whose trials (class 1 first) are classified.
    #[arg(long, conflicts_with = "trial", required_unless_present = "trial")]
    pub dataset: Option<PathBuf>,
    /// Individual trial CSV files to classify.
    #[arg(long)]
    pub trial: Vec<PathBuf>,
    /// Score predictions against the dataset's class labels.
    #[arg(long, requires = "dataset")]
    pub true_targets: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Boolean flag with a `--no-` counterpart; the last one given wins.
macro_rules! toggle {
    ($name:ident, $neg:ident) => {
        pub fn $name(&self) -> bool {
            !self.$neg || self.$name
        }
    };
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    /// Class to draw from (1 or 2).
    #[arg(long, default_value_t = 1)]
    pub class: usize,
    /// 1-based trial index within the class.
    #[arg(long, default_value_t = 1)]
    pub index: usize,
    /// Filter columns, e.g. `1:2` or `1,3,16`; all a-filters when absent.
    #[arg(long)]
    pub vectors: Option<String>,
    #[arg(long, overrides_with = "no_pairs")]
    pub pairs: bool,
    #[arg(long, overrides_with = "pairs")]
    pub no_pairs: bool,
    #[arg(long, overrides_with = "no_before")]
    pub before: bool,
    #[arg(long, overrides_with = "before")]
    pub no_before: bool,
    #[arg(long, overrides_with = "no_after")]
    pub after: bool,
    #[arg(long, overrides_with = "after")]
    pub no_after: bool,
    #[arg(long)]
    pub legend: bool,
    #[arg(long)]
    pub out: PathBuf,
}

impl PlotArgs {
    toggle!(pairs, no_pairs);
    toggle!(before, no_before);
    toggle!(after, no_after);
}

#[derive(Debug, Args)]
pub struct BoxplotArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value = "1")]
    pub vectors: String,
    #[arg(long, overrides_with = "no_pairs")]
    pub pairs: bool,
    #[arg(long, overrides_with = "pairs")]
    pub no_pairs: bool,
    #[arg(long, overrides_with = "no_show_log")]
    pub show_log: bool,
    #[arg(long, overrides_with = "show_log")]
    pub no_show_log: bool,
    #[arg(long)]
    pub out: PathBuf,
}

impl BoxplotArgs {
    toggle!(pairs, no_pairs);
    toggle!(show_log, no_show_log);
}
