//! Discrete measures on R^d and their frame diagnostics.
//!
//! A [`DiscreteMeasure`] is a finite collection of weighted atoms
//! `sum_i w_i * delta_{x_i}` with `w_i >= 0` summing to 1. Construction
//! validates everything once, so downstream code can assume:
//!
//! * all points share the ambient dimension `dim >= 1`,
//! * at least one atom is present,
//! * every weight is finite and nonnegative,
//! * the weight sum is 1 up to rounding (inputs within 1e-6 of total mass 1
//!   are rescaled; anything further off is rejected).
//!
//! The frame operator `S = sum_i w_i x_i x_i^T` is exposed as a
//! [`SymmetricOperator`] whose spectrum is computed eagerly at construction;
//! [`FrameDiagnostics`] summarizes the frame bounds, tightness, and second
//! moment in one pass.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CompensatedSum};

/// Weight vectors whose sum differs from 1 by more than this are rejected.
pub const WEIGHT_SUM_TOL: f64 = 1e-6;

/// Default relative spectral-gap tolerance for tightness:
/// `lambda_max - lambda_min <= TIGHT_TOL * max(1, lambda_max)`.
pub const TIGHT_TOL: f64 = 1e-8;

/// Default threshold on the lower frame bound: the support is considered to
/// span R^d when `lambda_min > FRAME_TOL`.
pub const FRAME_TOL: f64 = 1e-10;

/// Serialization shadow of [`DiscreteMeasure`]; deserializing runs the full
/// constructor so files cannot smuggle in invalid measures.
#[derive(Serialize, Deserialize)]
struct RawMeasure {
    dim: usize,
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

/// A finitely supported probability measure on R^d.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMeasure", into = "RawMeasure")]
pub struct DiscreteMeasure {
    dim: usize,
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl TryFrom<RawMeasure> for DiscreteMeasure {
    type Error = Error;

    fn try_from(raw: RawMeasure) -> Result<Self> {
        let mu = DiscreteMeasure::new(raw.points, raw.weights)?;
        if mu.dim != raw.dim {
            return Err(Error::DimensionMismatch {
                expected: raw.dim,
                found: mu.dim,
            });
        }
        Ok(mu)
    }
}

impl From<DiscreteMeasure> for RawMeasure {
    fn from(mu: DiscreteMeasure) -> Self {
        RawMeasure {
            dim: mu.dim,
            points: mu.points,
            weights: mu.weights,
        }
    }
}

impl DiscreteMeasure {
    /// Builds a measure from atoms and weights, validating and normalizing.
    ///
    /// Weights must be nonnegative and sum to 1 within [`WEIGHT_SUM_TOL`];
    /// the sum is then rescaled to exactly 1 (up to rounding).
    pub fn new(points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyMeasure);
        }
        if points.len() != weights.len() {
            return Err(Error::DimensionMismatch {
                expected: points.len(),
                found: weights.len(),
            });
        }
        let dim = points[0].len();
        if dim == 0 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: 0,
            });
        }
        for p in &points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: p.len(),
                });
            }
            if p.iter().any(|c| !c.is_finite()) {
                return Err(Error::NonFiniteInput("point coordinates"));
            }
        }
        for (index, &w) in weights.iter().enumerate() {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::NegativeWeight { index, value: w });
            }
        }
        let sum = linalg::csum(weights.iter().copied());
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::WeightSumOutOfRange { sum });
        }
        // Renormalize to a fixed point of the normalization itself, so
        // constructing from already-normalized weights is a bitwise no-op
        // and serialization roundtrips exactly.
        let mut weights = weights;
        for _ in 0..4 {
            let s = linalg::csum(weights.iter().copied());
            if s == 1.0 {
                break;
            }
            let rescaled: Vec<f64> = weights.iter().map(|w| w / s).collect();
            if rescaled == weights {
                break;
            }
            weights = rescaled;
        }
        Ok(Self {
            dim,
            points,
            weights,
        })
    }

    /// Canonical measure of a finite frame: `alpha` weights if given
    /// (validated like any weight vector), uniform `1/N` otherwise.
    pub fn canonical(frame: Vec<Vec<f64>>, alpha: Option<Vec<f64>>) -> Result<Self> {
        if frame.is_empty() {
            return Err(Error::EmptyMeasure);
        }
        let n = frame.len();
        let weights = alpha.unwrap_or_else(|| vec![1.0 / n as f64; n]);
        Self::new(frame, weights)
    }

    /// Point mass at `x`.
    pub fn dirac(x: Vec<f64>) -> Result<Self> {
        Self::new(vec![x], vec![1.0])
    }

    /// Same weights, new support. The pushforward of this measure under a
    /// map acting atom by atom.
    pub fn with_points(&self, points: Vec<Vec<f64>>) -> Result<Self> {
        if points.len() != self.points.len() {
            return Err(Error::DimensionMismatch {
                expected: self.points.len(),
                found: points.len(),
            });
        }
        for p in &points {
            if p.len() != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    found: p.len(),
                });
            }
            if p.iter().any(|c| !c.is_finite()) {
                return Err(Error::NonFiniteInput("point coordinates"));
            }
        }
        Ok(Self {
            dim: self.dim,
            points,
            weights: self.weights.clone(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of atoms.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false // constructors reject empty support
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    /// p-th moment `M_p = (sum_i w_i |x_i|^p)^(1/p)` for `p >= 1`.
    pub fn moment(&self, p: f64) -> Result<f64> {
        if !p.is_finite() || p < 1.0 {
            return Err(Error::InvalidExponent { p });
        }
        let mut acc = CompensatedSum::new();
        for (x, &w) in self.points.iter().zip(&self.weights) {
            acc.add(w * linalg::norm(x).powf(p));
        }
        Ok(acc.value().max(0.0).powf(1.0 / p))
    }

    /// Squared second moment `M_2^2 = sum_i w_i |x_i|^2`, the trace of the
    /// frame operator. Computed directly (no sqrt round-trip).
    pub fn second_moment_sq(&self) -> f64 {
        let mut acc = CompensatedSum::new();
        for (x, &w) in self.points.iter().zip(&self.weights) {
            acc.add(w * linalg::norm_sq(x));
        }
        acc.value().max(0.0)
    }

    /// Frame operator `S = sum_i w_i x_i x_i^T` with its spectrum.
    pub fn frame_operator(&self) -> SymmetricOperator {
        let d = self.dim;
        let mut acc = vec![CompensatedSum::new(); d * d];
        for (x, &w) in self.points.iter().zip(&self.weights) {
            for r in 0..d {
                let wr = w * x[r];
                for c in r..d {
                    acc[r * d + c].add(wr * x[c]);
                }
            }
        }
        let mut m = vec![0.0; d * d];
        for r in 0..d {
            for c in r..d {
                let v = acc[r * d + c].value();
                m[r * d + c] = v;
                m[c * d + r] = v;
            }
        }
        SymmetricOperator::new(d, m).expect("frame operator is symmetric by construction")
    }

    /// Frame bounds, tightness, and spectral gap, judged at the given
    /// tolerances (see [`FRAME_TOL`] and [`TIGHT_TOL`] for the defaults).
    pub fn diagnostics(&self, frame_tol: f64, tight_tol: f64) -> FrameDiagnostics {
        let s = self.frame_operator();
        FrameDiagnostics::from_operator(&s, self.second_moment_sq(), frame_tol, tight_tol)
    }

    /// [`Self::diagnostics`] at the default tolerances.
    pub fn diagnostics_default(&self) -> FrameDiagnostics {
        self.diagnostics(FRAME_TOL, TIGHT_TOL)
    }
}

/// A symmetric d x d operator together with its eigendecomposition.
///
/// Eigenvalues are ascending; eigenvectors are the columns of an orthogonal
/// matrix, column `k` pairing with eigenvalue `k`. The decomposition is
/// computed once at construction by a fixed-order Jacobi sweep, so equal
/// inputs always produce equal spectra.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricOperator {
    dim: usize,
    matrix: Vec<f64>,
    eigenvalues: Vec<f64>,
    eigenvectors: Vec<f64>,
}

impl SymmetricOperator {
    /// Wraps a row-major d x d matrix. The matrix must be symmetric within
    /// `1e-12 * (1 + max |entry|)`; it is then symmetrized exactly.
    pub fn new(dim: usize, matrix: Vec<f64>) -> Result<Self> {
        if dim == 0 || matrix.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: matrix.len(),
            });
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput("matrix entries"));
        }
        let tol = 1e-12 * (1.0 + linalg::max_abs(&matrix));
        let mut m = matrix;
        for r in 0..dim {
            for c in (r + 1)..dim {
                let a = m[r * dim + c];
                let b = m[c * dim + r];
                if (a - b).abs() > tol {
                    return Err(Error::PreconditionViolated(format!(
                        "matrix not symmetric: |m[{r},{c}] - m[{c},{r}]| = {:.3e}",
                        (a - b).abs()
                    )));
                }
                let avg = 0.5 * (a + b);
                m[r * dim + c] = avg;
                m[c * dim + r] = avg;
            }
        }
        let (eigenvalues, eigenvectors) = linalg::jacobi_eigen(dim, &m);
        Ok(Self {
            dim,
            matrix: m,
            eigenvalues,
            eigenvectors,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Row-major matrix entries.
    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    pub fn entry(&self, r: usize, c: usize) -> f64 {
        self.matrix[r * self.dim + c]
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Orthonormal eigenvectors, row-major, column `k` for eigenvalue `k`.
    pub fn eigenvectors(&self) -> &[f64] {
        &self.eigenvectors
    }

    pub fn eigenvector(&self, k: usize) -> Vec<f64> {
        (0..self.dim)
            .map(|r| self.eigenvectors[r * self.dim + k])
            .collect()
    }

    pub fn lambda_min(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues[self.dim - 1]
    }

    /// Operator norm, `max(|lambda_min|, |lambda_max|)`.
    pub fn operator_norm(&self) -> f64 {
        self.lambda_min().abs().max(self.lambda_max().abs())
    }

    pub fn trace(&self) -> f64 {
        linalg::csum((0..self.dim).map(|i| self.matrix[i * self.dim + i]))
    }

    /// Sum of squared entries, `trace(M^2)` for symmetric M.
    pub fn frobenius_sq(&self) -> f64 {
        linalg::csum(self.matrix.iter().map(|v| v * v)).max(0.0)
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        Ok(linalg::mat_vec(self.dim, &self.matrix, x))
    }

    /// Entrywise difference `self - other` as a new operator.
    pub fn difference(&self, other: &SymmetricOperator) -> Result<SymmetricOperator> {
        if other.dim != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        let m = self
            .matrix
            .iter()
            .zip(&other.matrix)
            .map(|(a, b)| a - b)
            .collect();
        SymmetricOperator::new(self.dim, m)
    }
}

/// One-pass summary of the frame properties of a measure.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameDiagnostics {
    /// Optimal lower frame bound `A = lambda_min(S)`.
    pub lower: f64,
    /// Optimal upper frame bound `B = lambda_max(S)`.
    pub upper: f64,
    /// `lambda_min > frame_tol`: the support spans R^d.
    pub is_frame: bool,
    /// Spectral gap within `tight_tol * max(1, lambda_max)`.
    pub is_tight: bool,
    /// Spectral gap `delta = lambda_max - lambda_min`.
    pub spectral_gap: f64,
    /// Squared second moment `M_2^2 = trace(S)`.
    pub second_moment: f64,
}

impl FrameDiagnostics {
    pub(crate) fn from_operator(
        s: &SymmetricOperator,
        second_moment: f64,
        frame_tol: f64,
        tight_tol: f64,
    ) -> Self {
        let lower = s.lambda_min();
        let upper = s.lambda_max();
        let spectral_gap = upper - lower;
        FrameDiagnostics {
            lower,
            upper,
            is_frame: lower > frame_tol,
            is_tight: spectral_gap <= tight_tol * upper.max(1.0),
            spectral_gap,
            second_moment,
        }
    }
}
