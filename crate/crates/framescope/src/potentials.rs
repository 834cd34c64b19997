//! Frame potentials, the tightness potential, and their gradients.
//!
//! For a measure `mu = sum_i w_i delta_{x_i}` with frame operator `S`:
//!
//! * frame potential `PFP(mu) = sum_{i,j} w_i w_j <x_i, x_j>^2 = trace(S^2)`,
//! * tightness potential `TP(mu) = PFP(mu) - M_2^4 / d >= 0`, zero exactly on
//!   tight measures (and on the point mass at the origin),
//! * tightness operator `T = S - (M_2^2 / d) I`, whose operator norm is
//!   bounded by `sqrt(TP)`,
//! * p-frame potential `PFP_p(mu) = sum_{i,j} w_i w_j |<x_i, x_j>|^p` for
//!   even `p >= 2`, bounded below by `c_{p,d} (M_p^p)^2`.
//!
//! `TP` has two independent computation routes: through the entries of `S`
//! (the value reported) and through its spectrum,
//! `(1/d) sum_{i<j} (lambda_i - lambda_j)^2`. Keeping both exposed lets the
//! test suite cross-check the frame operator assembly against the
//! eigensolver, so the two are never collapsed into one code path.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CompensatedSum};
use crate::measure::{DiscreteMeasure, SymmetricOperator};

/// A potential value with its lower bound and auxiliary spectral data.
///
/// `gap = value - lower_bound` is nonnegative up to rounding (a gap below
/// -1e-10 indicates a bug, not a sharp instance). `spectral_value` holds the
/// independently computed spectral form when one exists for the potential at
/// hand, and `operator_norm` the tightness-operator norm where meaningful.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialReport {
    pub value: f64,
    pub lower_bound: f64,
    pub gap: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spectral_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub operator_norm: Option<f64>,
}

/// A vector field sampled on the support of a measure.
///
/// `vectors[i]` is the field at atom `i`; `weights` mirrors the measure's
/// weights so the Euclidean gradient of the underlying functional in the
/// coordinates of atom `i` is `weights[i] * vectors[i]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientField {
    vectors: Vec<Vec<f64>>,
    weights: Vec<f64>,
    exponent_p: f64,
}

impl GradientField {
    pub(crate) fn new(vectors: Vec<Vec<f64>>, weights: Vec<f64>, exponent_p: f64) -> Self {
        debug_assert_eq!(vectors.len(), weights.len());
        Self {
            vectors,
            weights,
            exponent_p,
        }
    }

    /// Field values, one per atom.
    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// The exponent of the potential this field differentiates.
    pub fn exponent(&self) -> f64 {
        self.exponent_p
    }

    /// Euclidean gradient rows `w_i * field(x_i)`.
    pub fn euclidean(&self) -> Vec<Vec<f64>> {
        self.vectors
            .iter()
            .zip(&self.weights)
            .map(|(v, &w)| linalg::scaled(v, w))
            .collect()
    }

    /// Largest field magnitude over the support.
    pub fn max_norm(&self) -> f64 {
        self.vectors
            .iter()
            .map(|v| linalg::norm(v))
            .fold(0.0, f64::max)
    }
}

/// Probabilistic frame potential `PFP(mu) = trace(S^2)`.
///
/// Evaluated through the frame operator in O(N d^2); this is algebraically
/// identical to the double sum over atom pairs.
pub fn pfp(mu: &DiscreteMeasure) -> f64 {
    mu.frame_operator().frobenius_sq()
}

/// Finite frame potential `FP(Phi) = sum_{i,j} <phi_i, phi_j>^2`.
///
/// Equals `N^2 * PFP` of the canonical measure with uniform weights.
pub fn fp(frame: &[Vec<f64>]) -> Result<f64> {
    if frame.is_empty() {
        return Err(Error::EmptyMeasure);
    }
    let dim = frame[0].len();
    for v in frame {
        if v.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: v.len(),
            });
        }
    }
    let mut acc = CompensatedSum::new();
    for a in frame {
        for b in frame {
            let ip = linalg::dot(a, b);
            acc.add(ip * ip);
        }
    }
    Ok(acc.value())
}

/// Tightness potential `TP(mu) = PFP(mu) - M_2^4 / d` with spectral data.
///
/// * `value`: from the frame-operator entries (`trace(S^2) - M_2^4 / d`),
/// * `spectral_value`: `(1/d) sum_{i<j} (lambda_i - lambda_j)^2`,
/// * `operator_norm`: `|S - (M_2^2/d) I|`, which never exceeds `sqrt(TP)`.
pub fn tightness_potential(mu: &DiscreteMeasure) -> PotentialReport {
    let s = mu.frame_operator();
    let d = mu.dim() as f64;
    let m2sq = mu.second_moment_sq();
    let value = s.frobenius_sq() - m2sq * m2sq / d;
    let lam = s.eigenvalues();
    let mut acc = CompensatedSum::new();
    for i in 0..lam.len() {
        for j in (i + 1)..lam.len() {
            let diff = lam[i] - lam[j];
            acc.add(diff * diff);
        }
    }
    let spectral_value = acc.value() / d;
    let center = m2sq / d;
    let operator_norm = (s.lambda_max() - center).max(center - s.lambda_min());
    PotentialReport {
        value,
        lower_bound: 0.0,
        gap: value,
        spectral_value: Some(spectral_value),
        operator_norm: Some(operator_norm),
    }
}

/// Scalar tightness potential, the `value` of [`tightness_potential`].
pub fn tp_value(mu: &DiscreteMeasure) -> f64 {
    let s = mu.frame_operator();
    let d = mu.dim() as f64;
    let m2sq = mu.second_moment_sq();
    s.frobenius_sq() - m2sq * m2sq / d
}

/// Tightness operator `T = S - (M_2^2 / d) I`.
pub fn tightness_operator(mu: &DiscreteMeasure) -> SymmetricOperator {
    let s = mu.frame_operator();
    let d = mu.dim();
    let shift = mu.second_moment_sq() / d as f64;
    let mut m = s.matrix().to_vec();
    for i in 0..d {
        m[i * d + i] -= shift;
    }
    SymmetricOperator::new(d, m).expect("shifted frame operator stays symmetric")
}

/// Gradient field of `TP`: the field `4 T x` sampled on the support.
///
/// The Euclidean gradient of `TP` in the coordinates of atom `k` is
/// `4 w_k T x_k`, available via [`GradientField::euclidean`].
pub fn tp_gradient(mu: &DiscreteMeasure) -> GradientField {
    let t = tightness_operator(mu);
    let vectors = mu
        .points()
        .iter()
        .map(|x| linalg::scaled(&t.apply(x).expect("support matches operator dim"), 4.0))
        .collect();
    GradientField::new(vectors, mu.weights().to_vec(), 2.0)
}

fn require_even(p: u32) -> Result<()> {
    if p < 2 || !p.is_multiple_of(2) {
        return Err(Error::OddExponent { p });
    }
    Ok(())
}

/// `M_p^p = sum_i w_i |x_i|^p` for even p, via integer powers of `|x|^2`.
fn even_moment_pow(mu: &DiscreteMeasure, p: u32) -> f64 {
    debug_assert!(p >= 2 && p.is_multiple_of(2));
    let half = (p / 2) as i32;
    let mut acc = CompensatedSum::new();
    for (x, &w) in mu.points().iter().zip(mu.weights()) {
        acc.add(w * linalg::norm_sq(x).powi(half));
    }
    acc.value().max(0.0)
}

/// p-frame potential for even `p >= 2`, with its sharp lower bound
/// `c_{p,d} (M_p^p)^2`.
///
/// The double sum runs in O(N^2 d). For `p = 2` the spectral route
/// `sum lambda_i^2` is reported as `spectral_value`; the two agree with
/// [`pfp`] up to accumulation order.
pub fn pframe_potential(mu: &DiscreteMeasure, p: u32) -> Result<PotentialReport> {
    require_even(p)?;
    let pw = p as i32;
    let mut acc = CompensatedSum::new();
    for (xi, &wi) in mu.points().iter().zip(mu.weights()) {
        for (xj, &wj) in mu.points().iter().zip(mu.weights()) {
            acc.add(wi * wj * linalg::dot(xi, xj).powi(pw));
        }
    }
    let value = acc.value();
    let mp = even_moment_pow(mu, p);
    let lower_bound = cp_constant(mu.dim(), p)? * mp * mp;
    let spectral_value = if p == 2 {
        let lam = mu.frame_operator().eigenvalues().to_vec();
        Some(linalg::csum(lam.iter().map(|l| l * l)))
    } else {
        None
    };
    Ok(PotentialReport {
        value,
        lower_bound,
        gap: value - lower_bound,
        spectral_value,
        operator_norm: None,
    })
}

/// Sharp constant in the p-frame bound:
/// `c_{p,d} = (p-1)(p-3)...1 / ((d+p-2)(d+p-4)...d)` for even p.
pub fn cp_constant(d: usize, p: u32) -> Result<f64> {
    require_even(p)?;
    if d == 0 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            found: 0,
        });
    }
    let mut numer = 1.0;
    let mut k = p as i64 - 1;
    while k >= 1 {
        numer *= k as f64;
        k -= 2;
    }
    let mut denom = 1.0;
    let mut m = d as i64 + p as i64 - 2;
    while m >= d as i64 {
        denom *= m as f64;
        m -= 2;
    }
    Ok(numer / denom)
}

fn barycenter_at(mu: &DiscreteMeasure, p: u32, z: &[f64]) -> Vec<f64> {
    let d = mu.dim();
    let pm1 = (p - 1) as i32;
    let mut acc = vec![CompensatedSum::new(); d];
    for (x, &w) in mu.points().iter().zip(mu.weights()) {
        let coef = w * linalg::dot(z, x).powi(pm1);
        for (a, &xc) in acc.iter_mut().zip(x.iter()) {
            a.add(coef * xc);
        }
    }
    let scale = 2.0 * p as f64;
    acc.into_iter().map(|a| scale * a.value()).collect()
}

/// p-frame barycenter map `g_p(z) = 2p sum_i w_i <z, x_i>^(p-1) x_i`.
///
/// For `p = 2` this is `4 S z`.
pub fn pframe_barycenter(mu: &DiscreteMeasure, p: u32, z: &[f64]) -> Result<Vec<f64>> {
    require_even(p)?;
    if z.len() != mu.dim() {
        return Err(Error::DimensionMismatch {
            expected: mu.dim(),
            found: z.len(),
        });
    }
    if z.iter().any(|c| !c.is_finite()) {
        return Err(Error::NonFiniteInput("barycenter argument"));
    }
    Ok(barycenter_at(mu, p, z))
}

/// Gradient field of `PFP_p`: the barycenter map sampled on the support.
///
/// The Euclidean gradient of `PFP_p` at atom `k` is `w_k g_p(x_k)`.
pub fn pframe_gradient(mu: &DiscreteMeasure, p: u32) -> Result<GradientField> {
    require_even(p)?;
    let vectors = mu
        .points()
        .iter()
        .map(|x| barycenter_at(mu, p, x))
        .collect();
    Ok(GradientField::new(
        vectors,
        mu.weights().to_vec(),
        p as f64,
    ))
}

/// Gradient field of the even moment functional `M_2^{2k}`:
/// the field `2k M_2^{2(k-1)} x`, so the Euclidean gradient at atom `i` is
/// `2k M_2^{2(k-1)} w_i x_i`.
pub fn even_moment_gradient(mu: &DiscreteMeasure, k: u32) -> Result<GradientField> {
    if k == 0 {
        return Err(Error::InvalidExponent { p: 0.0 });
    }
    let m2sq = mu.second_moment_sq();
    let coef = 2.0 * k as f64 * m2sq.powi(k as i32 - 1);
    let vectors = mu.points().iter().map(|x| linalg::scaled(x, coef)).collect();
    Ok(GradientField::new(
        vectors,
        mu.weights().to_vec(),
        2.0 * k as f64,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(dim: usize, i: usize) -> Vec<f64> {
        let mut v = vec![0.0; dim];
        v[i] = 1.0;
        v
    }

    fn uniform_onb(d: usize) -> DiscreteMeasure {
        DiscreteMeasure::new((0..d).map(|i| e(d, i)).collect(), vec![1.0 / d as f64; d]).unwrap()
    }

    fn mercedes_benz() -> Vec<Vec<f64>> {
        [90.0f64, 210.0, 330.0]
            .iter()
            .map(|deg| {
                let t = deg.to_radians();
                vec![t.cos(), t.sin()]
            })
            .collect()
    }

    /// Literal O(N^2 d) double sum, kept independent of the trace route.
    fn pfp_double_sum(mu: &DiscreteMeasure) -> f64 {
        let mut total = 0.0;
        for (xi, &wi) in mu.points().iter().zip(mu.weights()) {
            for (xj, &wj) in mu.points().iter().zip(mu.weights()) {
                let mut ip = 0.0;
                for (a, b) in xi.iter().zip(xj) {
                    ip += a * b;
                }
                total += wi * wj * ip * ip;
            }
        }
        total
    }

    #[test]
    fn pfp_uniform_onb() {
        assert!((pfp(&uniform_onb(2)) - 0.5).abs() < 1e-14);
        assert!((pfp(&uniform_onb(5)) - 0.2).abs() < 1e-14);
    }

    #[test]
    fn pfp_dirac_origin() {
        let mu = DiscreteMeasure::dirac(vec![0.0, 0.0]).unwrap();
        assert_eq!(pfp(&mu), 0.0);
    }

    #[test]
    fn pfp_weighted_onb() {
        let mu = DiscreteMeasure::new(vec![e(2, 0), e(2, 1)], vec![0.75, 0.25]).unwrap();
        assert!((pfp(&mu) - 0.625).abs() < 1e-14);
    }

    #[test]
    fn pfp_matches_double_sum() {
        let mu = DiscreteMeasure::new(
            vec![
                vec![0.3, -1.2, 0.7],
                vec![1.1, 0.4, -0.2],
                vec![-0.5, 0.9, 1.3],
                vec![0.2, 0.2, -0.8],
            ],
            vec![0.1, 0.4, 0.3, 0.2],
        )
        .unwrap();
        assert!((pfp(&mu) - pfp_double_sum(&mu)).abs() < 1e-10);
    }

    #[test]
    fn fp_onb_equals_dim() {
        let frame: Vec<Vec<f64>> = (0..3).map(|i| e(3, i)).collect();
        assert!((fp(&frame).unwrap() - 3.0).abs() < 1e-14);
    }

    #[test]
    fn fp_repeated_vector() {
        let frame = vec![e(2, 0), e(2, 0)];
        assert!((fp(&frame).unwrap() - 4.0).abs() < 1e-14);
    }

    #[test]
    fn fp_mercedes_benz() {
        assert!((fp(&mercedes_benz()).unwrap() - 4.5).abs() < 1e-12);
    }

    #[test]
    fn fp_scales_as_n_squared_times_pfp() {
        let frame = mercedes_benz();
        let mu = DiscreteMeasure::canonical(frame.clone(), None).unwrap();
        let n = frame.len() as f64;
        assert!((fp(&frame).unwrap() - n * n * pfp(&mu)).abs() < 1e-12);
    }

    #[test]
    fn tp_zero_on_tight() {
        let rep = tightness_potential(&uniform_onb(3));
        assert!(rep.value.abs() < 1e-14);
        assert!(rep.spectral_value.unwrap().abs() < 1e-14);
        assert!(rep.gap >= -1e-10);
    }

    #[test]
    fn tp_weighted_onb_spec_values() {
        let mu = DiscreteMeasure::new(vec![e(2, 0), e(2, 1)], vec![0.75, 0.25]).unwrap();
        let rep = tightness_potential(&mu);
        assert!((rep.value - 0.125).abs() < 1e-14);
        assert!((rep.spectral_value.unwrap() - 0.125).abs() < 1e-14);
        assert!((rep.operator_norm.unwrap() - 0.25).abs() < 1e-14);
        assert!(rep.operator_norm.unwrap() <= rep.value.sqrt() + 1e-12);
    }

    #[test]
    fn tp_dirac_off_origin() {
        // S = x x^T has spectrum {|x|^2, 0, ...}; TP = |x|^4 (1 - 1/d).
        let mu = DiscreteMeasure::dirac(vec![1.0, 0.0]).unwrap();
        let rep = tightness_potential(&mu);
        assert!((rep.value - 0.5).abs() < 1e-14);
    }

    #[test]
    fn tp_equals_pfp_minus_bound() {
        let mu = DiscreteMeasure::new(
            vec![vec![0.3, -1.2], vec![1.1, 0.4], vec![-0.5, 0.9]],
            vec![0.2, 0.5, 0.3],
        )
        .unwrap();
        let d = mu.dim() as f64;
        let m2 = mu.moment(2.0).unwrap();
        let tp = tightness_potential(&mu).value;
        assert!((tp - (pfp(&mu) - m2.powi(4) / d)).abs() < 1e-10);
    }

    #[test]
    fn tightness_operator_weighted_onb() {
        let mu = DiscreteMeasure::new(vec![e(2, 0), e(2, 1)], vec![0.75, 0.25]).unwrap();
        let t = tightness_operator(&mu);
        assert!((t.entry(0, 0) - 0.25).abs() < 1e-14);
        assert!((t.entry(1, 1) + 0.25).abs() < 1e-14);
        assert!((t.operator_norm() - 0.25).abs() < 1e-14);
    }

    #[test]
    fn tightness_operator_vanishes_on_tight_and_dirac0() {
        let t = tightness_operator(&uniform_onb(4));
        assert!(t.operator_norm() < 1e-14);
        let z = DiscreteMeasure::dirac(vec![0.0, 0.0]).unwrap();
        assert_eq!(tightness_operator(&z).operator_norm(), 0.0);
    }

    #[test]
    fn tp_gradient_zero_on_tight() {
        let g = tp_gradient(&uniform_onb(3));
        assert!(g.max_norm() < 1e-14);
    }

    #[test]
    fn tp_gradient_weighted_onb() {
        let mu = DiscreteMeasure::new(vec![e(2, 0), e(2, 1)], vec![0.75, 0.25]).unwrap();
        let g = tp_gradient(&mu);
        // 4 T e1 = (1, 0); 4 T e2 = (0, -1)
        assert!((g.vectors()[0][0] - 1.0).abs() < 1e-14);
        assert!(g.vectors()[0][1].abs() < 1e-14);
        assert!(g.vectors()[1][0].abs() < 1e-14);
        assert!((g.vectors()[1][1] + 1.0).abs() < 1e-14);
        // Euclidean gradient carries the weights.
        let eg = g.euclidean();
        assert!((eg[0][0] - 0.75).abs() < 1e-14);
        assert!((eg[1][1] + 0.25).abs() < 1e-14);
    }

    #[test]
    fn tp_gradient_matches_direct_pair_sum() {
        // Independent route: grad_k TP = 4 w_k (sum_j w_j <x_k,x_j> x_j - (M2^2/d) x_k).
        let mu = DiscreteMeasure::new(
            vec![vec![0.4, -0.9], vec![1.2, 0.3], vec![-0.7, 0.6]],
            vec![0.25, 0.35, 0.4],
        )
        .unwrap();
        let d = mu.dim() as f64;
        let m2sq: f64 = mu
            .points()
            .iter()
            .zip(mu.weights())
            .map(|(x, &w)| w * (x[0] * x[0] + x[1] * x[1]))
            .sum();
        let g = tp_gradient(&mu);
        for k in 0..mu.len() {
            let xk = mu.point(k);
            let mut field = [0.0; 2];
            for (xj, &wj) in mu.points().iter().zip(mu.weights()) {
                let ip = xk[0] * xj[0] + xk[1] * xj[1];
                field[0] += wj * ip * xj[0];
                field[1] += wj * ip * xj[1];
            }
            field[0] = 4.0 * (field[0] - m2sq / d * xk[0]);
            field[1] = 4.0 * (field[1] - m2sq / d * xk[1]);
            assert!((field[0] - g.vectors()[k][0]).abs() < 1e-12);
            assert!((field[1] - g.vectors()[k][1]).abs() < 1e-12);
        }
    }

    #[test]
    fn cp_constant_values() {
        for d in 1..=6 {
            assert!((cp_constant(d, 2).unwrap() - 1.0 / d as f64).abs() < 1e-15);
        }
        assert!((cp_constant(2, 4).unwrap() - 0.375).abs() < 1e-15);
        assert!((cp_constant(1, 4).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(
            cp_constant(2, 3),
            Err(Error::OddExponent { p: 3 })
        ));
    }

    #[test]
    fn pframe_p2_matches_pfp() {
        let mu = uniform_onb(2);
        let rep = pframe_potential(&mu, 2).unwrap();
        assert!((rep.value - 0.5).abs() < 1e-14);
        assert!((rep.lower_bound - 0.5).abs() < 1e-14);
        assert!(rep.gap.abs() < 1e-12);
        assert!((rep.spectral_value.unwrap() - rep.value).abs() < 1e-12);
    }

    #[test]
    fn pframe_p4_single_atom_line() {
        let mu = DiscreteMeasure::dirac(vec![1.0]).unwrap();
        let rep = pframe_potential(&mu, 4).unwrap();
        assert!((rep.value - 1.0).abs() < 1e-14);
        assert!((rep.lower_bound - 1.0).abs() < 1e-14);
    }

    #[test]
    fn pframe_p4_uniform_circle_hits_bound() {
        // 256 equispaced unit vectors: the discrete average of cos^4 equals
        // the continuous one (trapezoid rule is exact for low harmonics), so
        // PFP_4 = 3/8 = c_{4,2}.
        let n = 256;
        let pts: Vec<Vec<f64>> = (0..n)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                vec![t.cos(), t.sin()]
            })
            .collect();
        let mu = DiscreteMeasure::canonical(pts, None).unwrap();
        let rep = pframe_potential(&mu, 4).unwrap();
        assert!((rep.lower_bound - 0.375).abs() < 1e-12);
        assert!((rep.value - 0.375).abs() < 1e-12);
        assert!(rep.gap.abs() < 1e-12);
    }

    #[test]
    fn pframe_rejects_odd_p() {
        let mu = uniform_onb(2);
        assert!(matches!(
            pframe_potential(&mu, 3),
            Err(Error::OddExponent { p: 3 })
        ));
        assert!(matches!(
            pframe_potential(&mu, 0),
            Err(Error::OddExponent { p: 0 })
        ));
    }

    #[test]
    fn barycenter_p2_is_4sz() {
        let mu = DiscreteMeasure::new(
            vec![vec![0.6, -0.3], vec![-0.2, 1.1]],
            vec![0.4, 0.6],
        )
        .unwrap();
        let z = vec![0.7, 0.5];
        let g = pframe_barycenter(&mu, 2, &z).unwrap();
        let s = mu.frame_operator();
        let sz = s.apply(&z).unwrap();
        assert!((g[0] - 4.0 * sz[0]).abs() < 1e-12);
        assert!((g[1] - 4.0 * sz[1]).abs() < 1e-12);
    }

    #[test]
    fn barycenter_p4_single_atom() {
        let mu = DiscreteMeasure::dirac(vec![1.0, 0.0]).unwrap();
        let g = pframe_barycenter(&mu, 4, &[2.0, 0.0]).unwrap();
        assert!((g[0] - 64.0).abs() < 1e-12);
        assert!(g[1].abs() < 1e-12);
    }

    #[test]
    fn barycenter_at_zero_is_zero() {
        let mu = uniform_onb(2);
        let g = pframe_barycenter(&mu, 4, &[0.0, 0.0]).unwrap();
        assert_eq!(g, vec![0.0, 0.0]);
    }

    #[test]
    fn even_moment_gradient_fields() {
        let mu = DiscreteMeasure::new(vec![vec![0.5, -1.0], vec![2.0, 0.25]], vec![0.5, 0.5])
            .unwrap();
        let g1 = even_moment_gradient(&mu, 1).unwrap();
        for (v, x) in g1.vectors().iter().zip(mu.points()) {
            assert!((v[0] - 2.0 * x[0]).abs() < 1e-14);
            assert!((v[1] - 2.0 * x[1]).abs() < 1e-14);
        }
        let m2sq = mu.second_moment_sq();
        let g2 = even_moment_gradient(&mu, 2).unwrap();
        for (v, x) in g2.vectors().iter().zip(mu.points()) {
            assert!((v[0] - 4.0 * m2sq * x[0]).abs() < 1e-13);
        }
        assert!(matches!(
            even_moment_gradient(&mu, 0),
            Err(Error::InvalidExponent { .. })
        ));
    }
}
