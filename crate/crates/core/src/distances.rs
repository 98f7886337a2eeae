//! Pairwise distances between the signals (rows) of a trial.
//!
//! Built-in kinds are Euclidean, dynamic time warping and Chebyshev. Other
//! signal distances can be plugged in through a [`DistanceRegistry`] and
//! referenced with [`DistanceKind::Custom`].

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, OnceLock};

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::csp::Trial;
use crate::error::{Error, Result};
use crate::linalg::SymMatrix;

/// Which signal distance feeds the distance-based covariance.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum DistanceKind {
    Euclidean,
    Dtw,
    Chebyshev,
    /// A distance registered by name in a [`DistanceRegistry`].
    Custom(String),
}

impl DistanceKind {
    pub const BUILTIN_NAMES: [&'static str; 3] = ["EUCL", "dtw", "infnorm"];

    pub fn name(&self) -> &str {
        match self {
            DistanceKind::Euclidean => "EUCL",
            DistanceKind::Dtw => "dtw",
            DistanceKind::Chebyshev => "infnorm",
            DistanceKind::Custom(name) => name,
        }
    }
}

impl fmt::Display for DistanceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DistanceKind {
    type Err = Error;

    /// Accepts the built-in names case-insensitively; anything else is
    /// rejected. Use [`DistanceKind::Custom`] directly for registered kinds.
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "eucl" | "euclidean" => Ok(DistanceKind::Euclidean),
            "dtw" => Ok(DistanceKind::Dtw),
            "infnorm" | "chebyshev" => Ok(DistanceKind::Chebyshev),
            _ => Err(Error::UnsupportedDistance {
                name: s.to_string(),
                supported: DistanceKind::BUILTIN_NAMES.join(", "),
            }),
        }
    }
}

impl From<DistanceKind> for String {
    fn from(k: DistanceKind) -> String {
        k.name().to_string()
    }
}

impl TryFrom<String> for DistanceKind {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse().or(Ok(DistanceKind::Custom(s)))
    }
}

/// Distance configuration: the kind, and optionally a convex mixture with
/// the Euclidean distance, `w·D_eucl + (1 − w)·D_kind`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceSpec {
    pub kind: DistanceKind,
    pub mixture: bool,
    pub w: f64,
}

impl Default for DistanceSpec {
    fn default() -> Self {
        DistanceSpec {
            kind: DistanceKind::Euclidean,
            mixture: false,
            w: 0.5,
        }
    }
}

impl DistanceSpec {
    pub fn new(kind: DistanceKind) -> Self {
        DistanceSpec {
            kind,
            ..Default::default()
        }
    }

    pub fn mixed(kind: DistanceKind, w: f64) -> Result<Self> {
        let spec = DistanceSpec {
            kind,
            mixture: true,
            w,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.w) {
            return Err(Error::Config(format!(
                "mixture weight w must lie in [0, 1], got {}",
                self.w
            )));
        }
        Ok(())
    }

    /// True when this setting reduces to the plain Euclidean distance, which
    /// makes the distance-based covariance coincide with the classical one.
    pub fn is_plain_euclidean(&self) -> bool {
        self.kind == DistanceKind::Euclidean && (!self.mixture || self.w == 1.0)
    }
}

/// Symmetric, zero-diagonal, non-negative matrix of signal distances.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix(SymMatrix);

impl DistanceMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        let n = m.nrows();
        if !m.is_square() || n == 0 {
            return Err(Error::InvalidDistance(format!(
                "distance matrix must be square and non-empty, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        for i in 0..n {
            if m[(i, i)] != 0.0 {
                return Err(Error::InvalidDistance(format!(
                    "non-zero diagonal entry at ({i}, {i})"
                )));
            }
            for j in 0..n {
                let v = m[(i, j)];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::InvalidDistance(format!(
                        "entry ({i}, {j}) = {v} is not a finite non-negative distance"
                    )));
                }
                if v != m[(j, i)] {
                    return Err(Error::InvalidDistance(format!(
                        "entries ({i}, {j}) and ({j}, {i}) differ"
                    )));
                }
            }
        }
        Ok(DistanceMatrix(SymMatrix::symmetrized(m)))
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0.get(i, j)
    }

    pub fn as_sym(&self) -> &SymMatrix {
        &self.0
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        self.0.as_matrix()
    }
}

/// A distance between two univariate signals.
pub trait SignalDistance: Send + Sync {
    fn distance(&self, a: &[f64], b: &[f64]) -> f64;
}

impl<F> SignalDistance for F
where
    F: Fn(&[f64], &[f64]) -> f64 + Send + Sync,
{
    fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        self(a, b)
    }
}

/// Named signal distances available to [`distance_for_in`].
#[derive(Clone)]
pub struct DistanceRegistry {
    entries: BTreeMap<String, Arc<dyn SignalDistance>>,
}

impl fmt::Debug for DistanceRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.entries.keys()).finish()
    }
}

impl Default for DistanceRegistry {
    fn default() -> Self {
        let mut registry = DistanceRegistry {
            entries: BTreeMap::new(),
        };
        registry.register("EUCL", euclidean);
        registry.register("dtw", dtw);
        registry.register("infnorm", chebyshev);
        registry
    }
}

impl DistanceRegistry {
    /// Registers (or replaces) a distance under `name`. Lookups are
    /// case-insensitive.
    pub fn register(&mut self, name: &str, distance: impl SignalDistance + 'static) {
        self.entries
            .insert(name.to_ascii_lowercase(), Arc::new(distance));
    }

    pub fn get(&self, kind: &DistanceKind) -> Result<&dyn SignalDistance> {
        self.entries
            .get(&kind.name().to_ascii_lowercase())
            .map(|d| d.as_ref())
            .ok_or_else(|| Error::UnsupportedDistance {
                name: kind.name().to_string(),
                supported: self.names().join(", "),
            })
    }

    pub fn names(&self) -> Vec<String> {
        self.entries.keys().cloned().collect()
    }

    fn builtin() -> &'static DistanceRegistry {
        static REGISTRY: OnceLock<DistanceRegistry> = OnceLock::new();
        REGISTRY.get_or_init(DistanceRegistry::default)
    }
}

/// ℓ₂ distance between two equal-length signals.
pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// ℓ∞ distance between two equal-length signals.
pub fn chebyshev(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0, |acc: f64, (x, y)| acc.max((x - y).abs()))
}

/// Unconstrained dynamic time warping with absolute-difference local cost
/// and the symmetric match/insert/delete step pattern. Returns the summed
/// cost of the optimal alignment, without length normalization.
pub fn dtw(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return if a.is_empty() && b.is_empty() {
            0.0
        } else {
            f64::INFINITY
        };
    }
    let m = b.len();
    let mut prev = vec![f64::INFINITY; m];
    let mut curr = vec![0.0; m];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            let cost = (x - y).abs();
            let best = match (i, j) {
                (0, 0) => 0.0,
                (0, _) => curr[j - 1],
                (_, 0) => prev[j],
                _ => prev[j - 1].min(prev[j]).min(curr[j - 1]),
            };
            curr[j] = cost + best;
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[m - 1]
}

fn pairwise(x: &Trial, distance: &dyn SignalDistance) -> Result<DistanceMatrix> {
    let rows = x.rows();
    let c = rows.len();
    let pairs: Vec<(usize, usize)> = (0..c)
        .flat_map(|i| (i + 1..c).map(move |j| (i, j)))
        .collect();
    let values: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| distance.distance(&rows[i], &rows[j]))
        .collect();
    let mut m = DMatrix::zeros(c, c);
    for (&(i, j), &v) in pairs.iter().zip(&values) {
        m[(i, j)] = v;
        m[(j, i)] = v;
    }
    DistanceMatrix::new(m)
}

pub fn euclidean_rows(x: &Trial) -> Result<DistanceMatrix> {
    pairwise(x, &euclidean)
}

pub fn dtw_rows(x: &Trial) -> Result<DistanceMatrix> {
    pairwise(x, &dtw)
}

pub fn chebyshev_rows(x: &Trial) -> Result<DistanceMatrix> {
    pairwise(x, &chebyshev)
}

/// Distance matrix among the rows of `x` under `spec`, using the built-in
/// registry.
pub fn distance_for(spec: &DistanceSpec, x: &Trial) -> Result<DistanceMatrix> {
    distance_for_in(DistanceRegistry::builtin(), spec, x)
}

/// Like [`distance_for`], resolving the kind in a caller-supplied registry.
pub fn distance_for_in(
    registry: &DistanceRegistry,
    spec: &DistanceSpec,
    x: &Trial,
) -> Result<DistanceMatrix> {
    spec.validate()?;
    let base = pairwise(x, registry.get(&spec.kind)?)?;
    if !spec.mixture {
        return Ok(base);
    }
    let eucl = pairwise(x, registry.get(&DistanceKind::Euclidean)?)?;
    let w = spec.w;
    let mixed = eucl
        .as_matrix()
        .zip_map(base.as_matrix(), |e, d| w * e + (1.0 - w) * d);
    DistanceMatrix::new(mixed)
}
