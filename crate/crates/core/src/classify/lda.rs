use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::linalg::{sym_eigen, SymMatrix};

const RIDGE_EPS: f64 = 1e-8;
const MAX_CONDITION: f64 = 1e10;
const MAX_RIDGE_DOUBLINGS: usize = 200;

/// Two-class Gaussian linear discriminant with a pooled covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct LdaModel {
    means: [DVector<f64>; 2],
    pooled_cov: SymMatrix,
    priors: [f64; 2],
    labels: [String; 2],
    ridge: f64,
}

/// Predicted class index (0 or 1) with both discriminant scores.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub class: usize,
    pub scores: [f64; 2],
}

impl LdaModel {
    /// Rebuilds a model from stored parameters, validating every invariant.
    pub fn from_parts(
        means: [DVector<f64>; 2],
        pooled_cov: SymMatrix,
        priors: [f64; 2],
        labels: [String; 2],
        ridge: f64,
    ) -> Result<Self> {
        let p = pooled_cov.dim();
        if means.iter().any(|m| m.len() != p) {
            return Err(Error::DimensionMismatch(format!(
                "class means must have length {p}"
            )));
        }
        if means.iter().any(|m| m.iter().any(|v| !v.is_finite())) {
            return Err(Error::InvalidInput("class means must be finite".into()));
        }
        if priors.iter().any(|&p| !(p > 0.0 && p < 1.0))
            || (priors[0] + priors[1] - 1.0).abs() > 1e-12
        {
            return Err(Error::InvalidInput(format!(
                "priors must lie in (0, 1) and sum to 1, got {priors:?}"
            )));
        }
        if labels[0].is_empty() || labels[0] == labels[1] {
            return Err(Error::InvalidInput(
                "labels must be distinct and non-empty".into(),
            ));
        }
        if !(ridge >= 0.0 && ridge.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "ridge must be non-negative, got {ridge}"
            )));
        }
        if pooled_cov.as_matrix().clone().cholesky().is_none() {
            return Err(Error::NotPositiveDefinite("pooled covariance".into()));
        }
        Ok(LdaModel {
            means,
            pooled_cov,
            priors,
            labels,
            ridge,
        })
    }

    pub fn dim(&self) -> usize {
        self.pooled_cov.dim()
    }

    pub fn means(&self) -> &[DVector<f64>; 2] {
        &self.means
    }

    pub fn pooled_cov(&self) -> &SymMatrix {
        &self.pooled_cov
    }

    pub fn priors(&self) -> [f64; 2] {
        self.priors
    }

    pub fn labels(&self) -> [&str; 2] {
        [&self.labels[0], &self.labels[1]]
    }

    pub fn label(&self, class: usize) -> &str {
        &self.labels[class]
    }

    /// Ridge added to the pooled covariance diagonal at fit time.
    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    fn cholesky(&self) -> Result<Cholesky<f64, Dyn>> {
        self.pooled_cov
            .as_matrix()
            .clone()
            .cholesky()
            .ok_or_else(|| Error::NotPositiveDefinite("pooled covariance".into()))
    }
}

fn well_conditioned(cov: &SymMatrix) -> Result<bool> {
    let eig = sym_eigen(cov)?;
    let max = eig.values[0];
    let min = eig.values[eig.dim() - 1];
    Ok(min > 0.0 && max / min <= MAX_CONDITION)
}

/// Fits LDA on an `n × p` feature matrix with class indices `targets`.
///
/// The pooled covariance uses denominator `n − 2`. When it is singular or
/// its condition number exceeds 1e10, a ridge `1e-8 · tr/p` is added to the
/// diagonal and doubled until that is no longer the case.
pub fn lda_fit(features: &DMatrix<f64>, targets: &[usize], labels: [&str; 2]) -> Result<LdaModel> {
    let (n, p) = features.shape();
    if targets.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{n} feature rows but {} targets",
            targets.len()
        )));
    }
    if p == 0 {
        return Err(Error::InvalidArgument(
            "feature matrix has no columns".into(),
        ));
    }
    if let Some(bad) = targets.iter().find(|&&t| t > 1) {
        return Err(Error::InvalidArgument(format!(
            "class index {bad} is not 0 or 1"
        )));
    }
    if features.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(
            "features contain non-finite values".into(),
        ));
    }
    let counts = [0, 1].map(|k| targets.iter().filter(|&&t| t == k).count());
    for (k, &count) in counts.iter().enumerate() {
        if count < 2 {
            return Err(Error::InsufficientData(format!(
                "class '{}' has {count} samples, LDA needs at least 2",
                labels[k]
            )));
        }
    }
    let means = [0, 1].map(|k| {
        let mut sum = DVector::zeros(p);
        for (row, _) in features.row_iter().zip(targets).filter(|(_, &t)| t == k) {
            sum += row.transpose();
        }
        sum / counts[k] as f64
    });
    let mut scatter = DMatrix::zeros(p, p);
    for (row, &t) in features.row_iter().zip(targets) {
        let d = row.transpose() - &means[t];
        scatter += &d * d.transpose();
    }
    let pooled = SymMatrix::symmetrized(scatter / (n - 2) as f64);

    let mut ridge = 0.0;
    let mut cov = pooled.clone();
    if !well_conditioned(&cov)? {
        let trace = pooled.as_matrix().trace();
        let base = if trace > 0.0 {
            RIDGE_EPS * trace / p as f64
        } else {
            RIDGE_EPS
        };
        ridge = base;
        let mut doublings = 0;
        loop {
            let identity = DMatrix::<f64>::identity(p, p);
            cov = SymMatrix::symmetrized(pooled.as_matrix() + identity * ridge);
            if well_conditioned(&cov)? {
                break;
            }
            doublings += 1;
            if doublings > MAX_RIDGE_DOUBLINGS {
                return Err(Error::NotPositiveDefinite(
                    "pooled covariance after ridge escalation".into(),
                ));
            }
            ridge *= 2.0;
        }
    }
    let priors = counts.map(|c| c as f64 / n as f64);
    LdaModel::from_parts(means, cov, priors, labels.map(str::to_string), ridge)
}

/// Scores each row with `δ_k(x) = xᵀΣ⁻¹μ_k − ½μ_kᵀΣ⁻¹μ_k + ln π_k` and
/// picks the larger; ties go to the first class.
pub fn lda_predict(m: &LdaModel, features: &DMatrix<f64>) -> Result<Vec<Prediction>> {
    if features.ncols() != m.dim() && features.nrows() > 0 {
        return Err(Error::DimensionMismatch(format!(
            "features have {} columns, model expects {}",
            features.ncols(),
            m.dim()
        )));
    }
    let chol = m.cholesky()?;
    let weights = [0, 1].map(|k| chol.solve(&m.means[k]));
    let offsets = [0, 1].map(|k| -0.5 * m.means[k].dot(&weights[k]) + m.priors[k].ln());
    Ok(features
        .row_iter()
        .map(|row| {
            let scores = [0, 1].map(|k| row.transpose().dot(&weights[k]) + offsets[k]);
            let class = if scores[0] >= scores[1] { 0 } else { 1 };
            Prediction { class, scores }
        })
        .collect())
}
