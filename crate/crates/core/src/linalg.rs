//! Dense symmetric kernels: eigendecomposition, the constrained generalized
//! eigenproblem, double centering and positive-definite repair.
//!
//! Everything here is a pure function of its inputs.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

const EIGEN_MAX_ITER: usize = 10_000;

/// A finite, exactly symmetric square matrix.
///
/// Construction symmetrizes the input as `(M + Mᵀ) / 2`, so callers can hand
/// in matrices carrying floating-point asymmetry from products like `XXᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(DMatrix<f64>);

impl SymMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "symmetric matrix must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.nrows() == 0 {
            return Err(Error::InvalidArgument("empty matrix".into()));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("matrix has non-finite entries".into()));
        }
        Ok(Self::symmetrized(m))
    }

    /// Symmetrizes without validation; for internal results already known
    /// to be finite and square.
    pub(crate) fn symmetrized(m: DMatrix<f64>) -> Self {
        let t = m.transpose();
        SymMatrix((m + t) * 0.5)
    }

    pub fn identity(dim: usize) -> Self {
        SymMatrix(DMatrix::identity(dim, dim))
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }
}

impl std::ops::Add for &SymMatrix {
    type Output = SymMatrix;

    fn add(self, rhs: &SymMatrix) -> SymMatrix {
        SymMatrix(&self.0 + &rhs.0)
    }
}

/// Eigenvalues sorted descending with their eigenvectors as matching columns.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPairs {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl EigenPairs {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    fn sorted_descending(values: DVector<f64>, vectors: DMatrix<f64>) -> Self {
        let mut order: Vec<usize> = (0..values.len()).collect();
        // Stable sort keeps the solver's order among exact ties.
        order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
        let sorted_values = DVector::from_iterator(order.len(), order.iter().map(|&i| values[i]));
        let mut sorted_vectors = DMatrix::zeros(vectors.nrows(), order.len());
        for (dst, &src) in order.iter().enumerate() {
            sorted_vectors.set_column(dst, &vectors.column(src));
        }
        canonicalize_signs(&mut sorted_vectors);
        EigenPairs {
            values: sorted_values,
            vectors: sorted_vectors,
        }
    }
}

/// Flips each column so that its largest-magnitude entry is positive. The
/// first entry wins among equal magnitudes.
pub fn canonicalize_signs(vectors: &mut DMatrix<f64>) {
    for mut col in vectors.column_iter_mut() {
        let mut pivot = 0.0_f64;
        for &v in col.iter() {
            if v.abs() > pivot.abs() {
                pivot = v;
            }
        }
        if pivot < 0.0 {
            col.neg_mut();
        }
    }
}

/// Symmetric eigendecomposition with values sorted descending and
/// orthonormal, sign-canonicalized eigenvectors.
pub fn sym_eigen(m: &SymMatrix) -> Result<EigenPairs> {
    sym_eigen_named(m, "matrix")
}

fn sym_eigen_named(m: &SymMatrix, name: &str) -> Result<EigenPairs> {
    let eig = SymmetricEigen::try_new(m.0.clone(), f64::EPSILON, EIGEN_MAX_ITER)
        .ok_or_else(|| Error::NoConvergence(name.to_string()))?;
    Ok(EigenPairs::sorted_descending(
        eig.eigenvalues,
        eig.eigenvectors,
    ))
}

/// Solves `b1 w = μ (b1 + b2) w` with the normalization `Wᵀ(b1 + b2)W = I`.
///
/// The returned values are the Rayleigh quotients `wᵀb1w / wᵀ(b1+b2)w`, in
/// `[0, 1]` for PSD inputs, sorted descending. They relate to the ratio
/// form `b1 w = λ b2 w` through `μ = λ / (1 + λ)`, which is monotone, so the
/// eigenvectors and their order agree between the two formulations.
pub fn generalized_eigen(b1: &SymMatrix, b2: &SymMatrix) -> Result<EigenPairs> {
    if b1.dim() != b2.dim() {
        return Err(Error::DimensionMismatch(format!(
            "generalized eigenproblem needs equal dimensions, got {} and {}",
            b1.dim(),
            b2.dim()
        )));
    }
    let sum = b1 + b2;
    let chol = sum
        .0
        .clone()
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite("b1 + b2".into()))?;
    let l = chol.l();
    // C = L⁻¹ b1 L⁻ᵀ, built with two triangular solves.
    let left = l
        .solve_lower_triangular(&b1.0)
        .ok_or_else(|| Error::NotPositiveDefinite("b1 + b2".into()))?;
    let whitened = l
        .solve_lower_triangular(&left.transpose())
        .ok_or_else(|| Error::NotPositiveDefinite("b1 + b2".into()))?;
    let inner = sym_eigen_named(&SymMatrix::symmetrized(whitened), "whitened b1")?;
    // W = L⁻ᵀ U
    let w = l
        .transpose()
        .solve_upper_triangular(&inner.vectors)
        .ok_or_else(|| Error::NotPositiveDefinite("b1 + b2".into()))?;
    let mut w = w;
    canonicalize_signs(&mut w);
    Ok(EigenPairs {
        values: inner.values,
        vectors: w,
    })
}

/// Maps a distance matrix to the centered inner-product matrix
/// `-½ H D⁽²⁾ H`, where `D⁽²⁾` squares entries and `H = I - 𝟙𝟙ᵀ/c`.
pub fn double_center(d: &SymMatrix) -> Result<SymMatrix> {
    if d.0.iter().any(|&v| v < 0.0) {
        return Err(Error::InvalidDistance(
            "distance matrix has negative entries".into(),
        ));
    }
    let c = d.dim();
    let sq = d.0.map(|v| v * v);
    // -½ H S H expands to -½ (S - r𝟙ᵀ - 𝟙rᵀ + g) with r the row means of S
    // and g its grand mean; S is symmetric so row and column means agree.
    let row_means: Vec<f64> = (0..c).map(|i| sq.row(i).sum() / c as f64).collect();
    let grand = row_means.iter().sum::<f64>() / c as f64;
    let out = DMatrix::from_fn(c, c, |i, j| {
        -0.5 * (sq[(i, j)] - row_means[i] - row_means[j] + grand)
    });
    Ok(SymMatrix::symmetrized(out))
}

/// Replaces an indefinite or near-singular symmetric matrix by its
/// eigenvalue-clipped reconstruction.
///
/// The clip level is `eig_tol · λ_max`, or `eig_tol` itself when `λ_max ≤ 0`.
/// A matrix whose smallest eigenvalue already reaches the clip level is
/// returned unchanged, which makes the repair idempotent.
pub fn repair_positive_definite(m: &SymMatrix, eig_tol: f64) -> Result<SymMatrix> {
    if !(eig_tol > 0.0 && eig_tol.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "eig_tol must be positive and finite, got {eig_tol}"
        )));
    }
    let eig = sym_eigen_named(m, "matrix under PD repair")?;
    let n = eig.dim();
    let lambda_max = eig.values[0];
    let lambda_min = eig.values[n - 1];
    let floor = clip_level(lambda_max, eig_tol);
    // Relative slack absorbs the rounding left by a previous repair.
    if lambda_min >= floor * (1.0 - 1e-9) {
        return Ok(m.clone());
    }
    let clipped = eig.values.map(|v| v.max(floor));
    let v = &eig.vectors;
    let scaled = DMatrix::from_fn(n, n, |i, j| v[(i, j)] * clipped[j]);
    Ok(SymMatrix::symmetrized(&scaled * v.transpose()))
}

/// Eigenvalue floor used by [`repair_positive_definite`].
pub fn clip_level(lambda_max: f64, eig_tol: f64) -> f64 {
    if lambda_max > 0.0 {
        eig_tol * lambda_max
    } else {
        eig_tol
    }
}

/// Default eigenvalue tolerance for PD repair.
pub const DEFAULT_EIG_TOL: f64 = 1e-6;
