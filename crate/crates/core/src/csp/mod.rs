//! Common Spatial Patterns and its distance-based generalization.
//!
//! Filters solve `max tr(WᵀB₁W)` subject to `Wᵀ(B₁ + B₂)W = I`, where `B_k`
//! is the class-average covariance of standardized trials. With a
//! non-Euclidean distance, `B_k` is rebuilt from the double-centered
//! distance matrix of each trial plus the mean-signal terms; for the
//! Euclidean distance both constructions agree.

mod features;

pub use features::{extract_features, FeatureKind, FeatureSpec, VARIANCE_FLOOR};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::distances::{distance_for_in, DistanceRegistry, DistanceSpec};
use crate::error::{Error, Result};
use crate::linalg::{double_center, generalized_eigen, repair_positive_definite, SymMatrix};

/// One unit's recording: `c` signals (rows) over `T` samples (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct Trial(DMatrix<f64>);

impl Trial {
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        if data.nrows() < 2 {
            return Err(Error::InvalidInput(format!(
                "a trial needs at least 2 signals, got {}",
                data.nrows()
            )));
        }
        if data.ncols() == 0 {
            return Err(Error::InvalidInput(
                "a trial needs at least 1 sample".into(),
            ));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            let (col, row) = (pos / data.nrows(), pos % data.nrows());
            return Err(Error::InvalidInput(format!(
                "non-finite value at signal {row}, sample {col}"
            )));
        }
        Ok(Trial(data))
    }

    /// Builds a trial from equal-length signal rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let t = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != t) {
            return Err(Error::InvalidInput(format!(
                "signal {bad} has {} samples, expected {t}",
                rows[bad].len()
            )));
        }
        Trial::new(DMatrix::from_fn(rows.len(), t, |i, j| rows[i][j]))
    }

    pub fn channels(&self) -> usize {
        self.0.nrows()
    }

    pub fn samples(&self) -> usize {
        self.0.ncols()
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.0.row(i).iter().copied().collect()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.channels()).map(|i| self.row(i)).collect()
    }

    /// `tr(XXᵀ)`, the total energy of the trial.
    pub fn energy(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum()
    }
}

/// Two labelled classes of trials sharing one channel count.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    labels: [String; 2],
    classes: [Vec<Trial>; 2],
}

impl LabeledDataset {
    pub fn new(
        label1: impl Into<String>,
        class1: Vec<Trial>,
        label2: impl Into<String>,
        class2: Vec<Trial>,
    ) -> Result<Self> {
        let labels = [label1.into(), label2.into()];
        if labels.iter().any(String::is_empty) {
            return Err(Error::InvalidArgument(
                "class labels must be non-empty".into(),
            ));
        }
        if labels[0] == labels[1] {
            return Err(Error::InvalidArgument(format!(
                "class labels must differ, both are '{}'",
                labels[0]
            )));
        }
        for (label, trials) in labels.iter().zip([&class1, &class2]) {
            if trials.len() < 2 {
                return Err(Error::InsufficientData(format!(
                    "class '{label}' has {} trials, at least 2 are required",
                    trials.len()
                )));
            }
        }
        let c = class1[0].channels();
        for (label, trials) in labels.iter().zip([&class1, &class2]) {
            if let Some(i) = trials.iter().position(|t| t.channels() != c) {
                return Err(Error::DimensionMismatch(format!(
                    "trial {} of class '{label}' has {} signals, expected {c}",
                    i + 1,
                    trials[i].channels()
                )));
            }
        }
        Ok(LabeledDataset {
            labels,
            classes: [class1, class2],
        })
    }

    pub fn labels(&self) -> [&str; 2] {
        [&self.labels[0], &self.labels[1]]
    }

    pub fn label(&self, class: usize) -> &str {
        &self.labels[class]
    }

    /// Trials of class `0` or `1`.
    pub fn class(&self, class: usize) -> &[Trial] {
        &self.classes[class]
    }

    pub fn counts(&self) -> [usize; 2] {
        [self.classes[0].len(), self.classes[1].len()]
    }

    pub fn len(&self) -> usize {
        self.classes[0].len() + self.classes[1].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn channels(&self) -> usize {
        self.classes[0][0].channels()
    }

    /// All trials with their class index, class 1 first.
    pub fn iter(&self) -> impl Iterator<Item = (usize, &Trial)> {
        self.classes[0]
            .iter()
            .map(|t| (0, t))
            .chain(self.classes[1].iter().map(|t| (1, t)))
    }

    /// Class index of every trial in [`LabeledDataset::iter`] order.
    pub fn targets(&self) -> Vec<usize> {
        self.iter().map(|(k, _)| k).collect()
    }
}

/// Rescales `x` so that `tr(xxᵀ)` equals the channel count.
pub fn standardize_trial(x: &Trial) -> Result<Trial> {
    let energy = x.energy();
    if energy == 0.0 {
        return Err(Error::DegenerateTrial(
            "cannot standardize an all-zero trial".into(),
        ));
    }
    let scale = (x.channels() as f64 / energy).sqrt();
    Ok(Trial(&x.0 * scale))
}

fn check_uniform(trials: &[Trial]) -> Result<usize> {
    let first = trials
        .first()
        .ok_or_else(|| Error::InvalidArgument("no trials to average".into()))?;
    let c = first.channels();
    if let Some(i) = trials.iter().position(|t| t.channels() != c) {
        return Err(Error::DimensionMismatch(format!(
            "trial {} has {} signals, expected {c}",
            i + 1,
            trials[i].channels()
        )));
    }
    Ok(c)
}

/// Sums per-trial matrices in trial order and divides by their count, so
/// the result does not depend on how the terms were computed in parallel.
fn ordered_mean(terms: Vec<DMatrix<f64>>, c: usize) -> SymMatrix {
    let n = terms.len() as f64;
    let sum = terms
        .into_iter()
        .fold(DMatrix::zeros(c, c), |acc, m| acc + m);
    SymMatrix::symmetrized(sum / n)
}

/// Average of `XXᵀ` over (already standardized) trials.
pub fn class_covariance_classical(trials: &[Trial]) -> Result<SymMatrix> {
    let c = check_uniform(trials)?;
    let terms: Vec<DMatrix<f64>> = trials.par_iter().map(|x| &x.0 * x.0.transpose()).collect();
    Ok(ordered_mean(terms, c))
}

/// Per-trial distance-based covariance
/// `P + X x̄ 𝟙ᵀ + 𝟙 x̄ᵀ Xᵀ − (x̄ᵀx̄) 𝟙𝟙ᵀ`, where `P` is the double-centered
/// distance matrix of the rows and `x̄` the mean signal over channels.
pub fn distance_covariance(
    registry: &DistanceRegistry,
    x: &Trial,
    spec: &DistanceSpec,
) -> Result<SymMatrix> {
    let d = distance_for_in(registry, spec, x)?;
    let p = double_center(d.as_sym())?;
    let c = x.channels();
    let mean_signal: DVector<f64> = x.0.row_mean().transpose();
    let projected = &x.0 * &mean_signal;
    let norm2 = mean_signal.norm_squared();
    let m = DMatrix::from_fn(c, c, |i, j| {
        p.get(i, j) + projected[i] + projected[j] - norm2
    });
    Ok(SymMatrix::symmetrized(m))
}

/// Class-average distance-based covariance, without PD repair.
pub fn class_covariance_db_unrepaired(
    registry: &DistanceRegistry,
    trials: &[Trial],
    spec: &DistanceSpec,
) -> Result<SymMatrix> {
    let c = check_uniform(trials)?;
    spec.validate()?;
    let terms = trials
        .par_iter()
        .map(|x| distance_covariance(registry, x, spec).map(SymMatrix::into_inner))
        .collect::<Result<Vec<_>>>()?;
    Ok(ordered_mean(terms, c))
}

/// Class-average distance-based covariance, repaired to be positive
/// definite with tolerance `eig_tol`.
pub fn class_covariance_db(
    trials: &[Trial],
    spec: &DistanceSpec,
    eig_tol: f64,
) -> Result<SymMatrix> {
    let raw = class_covariance_db_unrepaired(&DistanceRegistry::default(), trials, spec)?;
    repair_positive_definite(&raw, eig_tol)
}

/// How class covariances are built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CovarianceMethod {
    /// Classical when the distance is plain Euclidean, distance-based
    /// otherwise.
    #[default]
    Auto,
    Classical,
    DistanceBased,
}

/// Knobs for filter computation beyond `q` and the distance.
#[derive(Debug, Clone)]
pub struct FilterOptions {
    pub eig_tol: f64,
    pub method: CovarianceMethod,
    pub registry: DistanceRegistry,
}

impl Default for FilterOptions {
    fn default() -> Self {
        FilterOptions {
            eig_tol: crate::linalg::DEFAULT_EIG_TOL,
            method: CovarianceMethod::Auto,
            registry: DistanceRegistry::default(),
        }
    }
}

impl FilterOptions {
    pub fn with_eig_tol(eig_tol: f64) -> Self {
        FilterOptions {
            eig_tol,
            ..Default::default()
        }
    }
}

/// Spatial filters `[a₁ … a_q | b₁ … b_q]` as the columns of a `c × 2q`
/// matrix. `a_j` maximize the variance of class 1 relative to the pooled
/// variance, `b_j` do the same for class 2.
#[derive(Debug, Clone, PartialEq)]
pub struct CspFilters {
    q: usize,
    w: DMatrix<f64>,
    eigenvalues: Vec<f64>,
    distance: DistanceSpec,
}

impl CspFilters {
    /// Assembles filters from stored parts, checking shapes and finiteness.
    pub fn from_parts(
        q: usize,
        w: DMatrix<f64>,
        eigenvalues: Vec<f64>,
        distance: DistanceSpec,
    ) -> Result<Self> {
        if q == 0 {
            return Err(Error::InvalidArgument("q must be at least 1".into()));
        }
        if w.ncols() != 2 * q || eigenvalues.len() != 2 * q {
            return Err(Error::DimensionMismatch(format!(
                "filters for q = {q} need 2q = {} columns and eigenvalues, got {} and {}",
                2 * q,
                w.ncols(),
                eigenvalues.len()
            )));
        }
        if 2 * q > w.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "2q = {} exceeds the {} channels",
                2 * q,
                w.nrows()
            )));
        }
        if w.iter().chain(&eigenvalues).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(
                "filters contain non-finite values".into(),
            ));
        }
        distance.validate()?;
        Ok(CspFilters {
            q,
            w,
            eigenvalues,
            distance,
        })
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn channels(&self) -> usize {
        self.w.nrows()
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.w
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn distance(&self) -> &DistanceSpec {
        &self.distance
    }

    /// Label of filter column `k` (0-based): `a1…aq` then `b1…bq`.
    pub fn column_label(&self, k: usize) -> String {
        if k < self.q {
            format!("a{}", k + 1)
        } else {
            format!("b{}", k - self.q + 1)
        }
    }

    /// Column indices of `a₁…a_s` followed by `b₁…b_s`.
    pub fn selected_columns(&self, selected_q: usize) -> Result<Vec<usize>> {
        if selected_q == 0 || selected_q > self.q {
            return Err(Error::Config(format!(
                "selected q must lie in 1..={}, got {selected_q}",
                self.q
            )));
        }
        Ok((0..selected_q).chain(self.q..self.q + selected_q).collect())
    }

    /// The `c × 2s` sub-matrix `[a₁ … a_s | b₁ … b_s]`.
    pub fn select(&self, selected_q: usize) -> Result<CspFilters> {
        let cols = self.selected_columns(selected_q)?;
        let w = self.w.select_columns(&cols);
        let eigenvalues = cols.iter().map(|&k| self.eigenvalues[k]).collect();
        Ok(CspFilters {
            q: selected_q,
            w,
            eigenvalues,
            distance: self.distance.clone(),
        })
    }
}

/// Filters from precomputed class covariances: repair both, solve the
/// generalized problem and keep the first and last `q` eigenvectors.
pub fn filters_from_covariances(
    b1: &SymMatrix,
    b2: &SymMatrix,
    q: usize,
    distance: &DistanceSpec,
    eig_tol: f64,
) -> Result<CspFilters> {
    let c = b1.dim();
    check_q(q, c)?;
    let b1 = repair_positive_definite(b1, eig_tol)?;
    let b2 = repair_positive_definite(b2, eig_tol)?;
    let eig = generalized_eigen(&b1, &b2)?;
    // a_j are the leading columns, b_j the trailing ones in reverse so
    // that b₁ has the smallest Rayleigh quotient.
    let cols: Vec<usize> = (0..q).chain((0..q).map(|j| c - 1 - j)).collect();
    let w = eig.vectors.select_columns(&cols);
    let eigenvalues = cols.iter().map(|&k| eig.values[k]).collect();
    CspFilters::from_parts(q, w, eigenvalues, distance.clone())
}

fn check_q(q: usize, c: usize) -> Result<()> {
    if q == 0 || 2 * q > c {
        return Err(Error::DimensionMismatch(format!(
            "q = {q} needs 1 <= 2q <= c = {c}"
        )));
    }
    Ok(())
}

/// Computes CSP or DB-CSP filters for a dataset.
pub fn compute_filters(
    data: &LabeledDataset,
    q: usize,
    spec: &DistanceSpec,
    eig_tol: f64,
) -> Result<CspFilters> {
    compute_filters_with(
        data.class(0),
        data.class(1),
        q,
        spec,
        &FilterOptions::with_eig_tol(eig_tol),
    )
}

/// Computes filters from raw (unstandardized) trials of each class.
pub fn compute_filters_with(
    class1: &[Trial],
    class2: &[Trial],
    q: usize,
    spec: &DistanceSpec,
    options: &FilterOptions,
) -> Result<CspFilters> {
    spec.validate()?;
    let c1 = check_uniform(class1)?;
    let c2 = check_uniform(class2)?;
    if c1 != c2 {
        return Err(Error::DimensionMismatch(format!(
            "classes have {c1} and {c2} signals"
        )));
    }
    check_q(q, c1)?;
    let standardize = |trials: &[Trial]| -> Result<Vec<Trial>> {
        trials.par_iter().map(standardize_trial).collect()
    };
    let s1 = standardize(class1)?;
    let s2 = standardize(class2)?;
    let classical = match options.method {
        CovarianceMethod::Auto => spec.is_plain_euclidean(),
        CovarianceMethod::Classical => true,
        CovarianceMethod::DistanceBased => false,
    };
    let (b1, b2) = if classical {
        (
            class_covariance_classical(&s1)?,
            class_covariance_classical(&s2)?,
        )
    } else {
        let cov = |s: &[Trial]| -> Result<SymMatrix> {
            let raw = class_covariance_db_unrepaired(&options.registry, s, spec)?;
            repair_positive_definite(&raw, options.eig_tol)
        };
        (cov(&s1)?, cov(&s2)?)
    };
    filters_from_covariances(&b1, &b2, q, spec, options.eig_tol)
}

/// Projects a trial onto the filters: `Wᵀx`, one row per filter column.
pub fn project(x: &Trial, f: &CspFilters) -> Result<Trial> {
    if x.channels() != f.channels() {
        return Err(Error::DimensionMismatch(format!(
            "trial has {} signals, filters expect {}",
            x.channels(),
            f.channels()
        )));
    }
    Ok(Trial(f.w.transpose() * &x.0))
}
