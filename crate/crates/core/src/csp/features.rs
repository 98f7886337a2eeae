use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::Trial;
use crate::error::{Error, Result};

/// Variances below this are floored before taking the logarithm.
pub const VARIANCE_FLOOR: f64 = 1e-12;

/// A per-signal summary statistic of a projected trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    LogVariance,
    Variance,
    Max,
    Min,
    Iqr,
}

impl FeatureKind {
    pub const ALL: [FeatureKind; 5] = [
        FeatureKind::LogVariance,
        FeatureKind::Variance,
        FeatureKind::Max,
        FeatureKind::Min,
        FeatureKind::Iqr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FeatureKind::LogVariance => "log_variance",
            FeatureKind::Variance => "variance",
            FeatureKind::Max => "max",
            FeatureKind::Min => "min",
            FeatureKind::Iqr => "iqr",
        }
    }

    fn needs_two_samples(self) -> bool {
        matches!(self, FeatureKind::LogVariance | FeatureKind::Variance)
    }
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FeatureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "log_variance" | "logvar" => Ok(FeatureKind::LogVariance),
            "variance" | "var" => Ok(FeatureKind::Variance),
            "max" => Ok(FeatureKind::Max),
            "min" => Ok(FeatureKind::Min),
            "iqr" => Ok(FeatureKind::Iqr),
            other => Err(Error::Config(format!(
                "unknown feature '{other}' (expected one of log_variance, variance, max, min, iqr)"
            ))),
        }
    }
}

/// Ordered, duplicate-free, non-empty list of feature kinds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<FeatureKind>", into = "Vec<FeatureKind>")]
pub struct FeatureSpec(Vec<FeatureKind>);

impl FeatureSpec {
    pub fn new(kinds: Vec<FeatureKind>) -> Result<Self> {
        if kinds.is_empty() {
            return Err(Error::Config(
                "at least one feature kind is required".into(),
            ));
        }
        for (i, k) in kinds.iter().enumerate() {
            if kinds[..i].contains(k) {
                return Err(Error::Config(format!("feature '{k}' listed twice")));
            }
        }
        Ok(FeatureSpec(kinds))
    }

    pub fn kinds(&self) -> &[FeatureKind] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl Default for FeatureSpec {
    fn default() -> Self {
        FeatureSpec(vec![FeatureKind::LogVariance])
    }
}

impl FromStr for FeatureSpec {
    type Err = Error;

    /// Parses a comma-separated list such as `log_variance,iqr`.
    fn from_str(s: &str) -> Result<Self> {
        let kinds = s
            .split(',')
            .filter(|p| !p.trim().is_empty())
            .map(str::parse)
            .collect::<Result<Vec<_>>>()?;
        FeatureSpec::new(kinds)
    }
}

impl TryFrom<Vec<FeatureKind>> for FeatureSpec {
    type Error = Error;

    fn try_from(kinds: Vec<FeatureKind>) -> Result<Self> {
        FeatureSpec::new(kinds)
    }
}

impl From<FeatureSpec> for Vec<FeatureKind> {
    fn from(spec: FeatureSpec) -> Self {
        spec.0
    }
}

fn sample_variance(row: &[f64]) -> f64 {
    let n = row.len() as f64;
    let mean = row.iter().sum::<f64>() / n;
    row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
}

/// Quantile with linear interpolation between order statistics, on an
/// already sorted slice.
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn statistic(kind: FeatureKind, row: &[f64]) -> f64 {
    match kind {
        FeatureKind::Variance => sample_variance(row),
        FeatureKind::LogVariance => sample_variance(row).max(VARIANCE_FLOOR).ln(),
        FeatureKind::Max => row.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        FeatureKind::Min => row.iter().copied().fold(f64::INFINITY, f64::min),
        FeatureKind::Iqr => {
            let mut sorted = row.to_vec();
            sorted.sort_by(f64::total_cmp);
            quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25)
        }
    }
}

/// Feature vector of a projected trial: for each kind in order, one value
/// per projected signal.
pub fn extract_features(x: &Trial, spec: &FeatureSpec) -> Result<Vec<f64>> {
    if x.samples() < 2 && spec.kinds().iter().any(|k| k.needs_two_samples()) {
        return Err(Error::DegenerateTrial(
            "variance needs at least 2 samples per signal".into(),
        ));
    }
    let rows = x.rows();
    Ok(spec
        .kinds()
        .iter()
        .flat_map(|&kind| rows.iter().map(move |row| statistic(kind, row)))
        .collect())
}
