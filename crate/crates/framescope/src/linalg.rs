//! Small dense linear algebra.
//!
//! Everything here is deterministic: fixed loop orders, compensated
//! summation, and a cyclic Jacobi eigensolver with a fixed sweep order.
//! Matrices are row-major `Vec<f64>` of length `d * d`; the sizes involved
//! are small enough that cache games would be noise.

/// Neumaier-compensated accumulator.
///
/// Double sums over atom pairs must not depend on accumulation order beyond
/// roughly 1e-12, and plain f64 summation of ~1e4 terms does not clear that
/// bar. Neumaier's variant also handles the case where the addend dominates
/// the running sum, which Kahan's original does not.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated sum of an iterator of f64.
pub fn csum<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let mut acc = CompensatedSum::new();
    for x in xs {
        acc.add(x);
    }
    acc.value()
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    let mut acc = CompensatedSum::new();
    for (a, b) in x.iter().zip(y.iter()) {
        acc.add(a * b);
    }
    acc.value()
}

pub fn norm_sq(x: &[f64]) -> f64 {
    dot(x, x)
}

pub fn norm(x: &[f64]) -> f64 {
    norm_sq(x).max(0.0).sqrt()
}

pub fn dist(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    let mut acc = CompensatedSum::new();
    for (a, b) in x.iter().zip(y.iter()) {
        let d = a - b;
        acc.add(d * d);
    }
    acc.value().max(0.0).sqrt()
}

pub fn scaled(x: &[f64], c: f64) -> Vec<f64> {
    x.iter().map(|v| c * v).collect()
}

/// x - c * y, elementwise.
pub fn sub_scaled(x: &[f64], y: &[f64], c: f64) -> Vec<f64> {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y.iter()).map(|(a, b)| a - c * b).collect()
}

pub fn identity(d: usize) -> Vec<f64> {
    let mut m = vec![0.0; d * d];
    for i in 0..d {
        m[i * d + i] = 1.0;
    }
    m
}

/// y = M x for a row-major d x d matrix.
pub fn mat_vec(d: usize, m: &[f64], x: &[f64]) -> Vec<f64> {
    debug_assert_eq!(m.len(), d * d);
    debug_assert_eq!(x.len(), d);
    (0..d).map(|r| dot(&m[r * d..(r + 1) * d], x)).collect()
}

pub fn frobenius(m: &[f64]) -> f64 {
    csum(m.iter().map(|v| v * v)).max(0.0).sqrt()
}

pub fn max_abs(m: &[f64]) -> f64 {
    m.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in ascending order and eigenvectors as the columns of
/// a row-major d x d matrix (column `k` pairs with eigenvalue `k`). The sweep
/// order over the upper triangle is fixed, so identical inputs give bitwise
/// identical output. Quadratic convergence makes 64 sweeps far more than
/// needed for the matrix sizes used here.
pub fn jacobi_eigen(d: usize, mat: &[f64]) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(mat.len(), d * d, "matrix must be d x d");
    let mut a = mat.to_vec();
    // Force exact symmetry so the rotations see a symmetric matrix even if
    // the input carries rounding-level asymmetry.
    for p in 0..d {
        for q in (p + 1)..d {
            let avg = 0.5 * (a[p * d + q] + a[q * d + p]);
            a[p * d + q] = avg;
            a[q * d + p] = avg;
        }
    }
    let mut v = identity(d);
    let scale = frobenius(&a).max(f64::MIN_POSITIVE);
    const MAX_SWEEPS: usize = 64;
    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..d {
            for q in (p + 1)..d {
                off += a[p * d + q] * a[p * d + q];
            }
        }
        if off.sqrt() <= 1e-15 * scale {
            break;
        }
        for p in 0..d.saturating_sub(1) {
            for q in (p + 1)..d {
                let apq = a[p * d + q];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let tau = (a[q * d + q] - a[p * d + p]) / (2.0 * apq);
                // Smaller-magnitude root of t^2 + 2 tau t - 1 = 0 keeps the
                // rotation angle below pi/4 (numerically stable choice).
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    1.0 / (tau - (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // A <- J^T A J with J the rotation in the (p, q) plane.
                for k in 0..d {
                    let akp = a[k * d + p];
                    let akq = a[k * d + q];
                    a[k * d + p] = c * akp - s * akq;
                    a[k * d + q] = s * akp + c * akq;
                }
                for k in 0..d {
                    let apk = a[p * d + k];
                    let aqk = a[q * d + k];
                    a[p * d + k] = c * apk - s * aqk;
                    a[q * d + k] = s * apk + c * aqk;
                }
                for k in 0..d {
                    let vkp = v[k * d + p];
                    let vkq = v[k * d + q];
                    v[k * d + p] = c * vkp - s * vkq;
                    v[k * d + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| a[i * d + i].total_cmp(&a[j * d + j]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| a[i * d + i]).collect();
    let mut eigenvectors = vec![0.0; d * d];
    for (new_col, &old_col) in order.iter().enumerate() {
        for r in 0..d {
            eigenvectors[r * d + new_col] = v[r * d + old_col];
        }
    }
    (eigenvalues, eigenvectors)
}
