//! Seeded instance generators.
//!
//! Every random construction draws from a counter-based generator keyed by
//! `(seed, stream)`, so independent consumers (parameter sweeps, property
//! suites) get reproducible, non-overlapping randomness from one master
//! seed.

use std::path::PathBuf;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{run_explicit, FlowConfig, Termination};
use crate::io;
use crate::linalg::{dot, norm};
use crate::measure::DiscreteMeasure;

/// The RNG for stream `stream` of master seed `seed`.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// How [`generate`] builds its measure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorKind {
    /// Uniform weights on points drawn from the unit sphere.
    RandomUnitNorm,
    /// The uniform orthonormal-basis measure (atoms cycle through the basis
    /// when `count > dim`) with every coordinate shifted by a uniform draw
    /// from `[-magnitude, magnitude]`.
    PerturbedOnb { magnitude: f64 },
    /// A measure that is eps-almost unit norm and eps-almost tight, built
    /// by perturbing a flow-constructed tight configuration.
    PaulsenInstance { eps: f64 },
    /// Reads a measure file; `dim`, `count`, and `seed` are ignored.
    FromFile { path: PathBuf },
}

/// A complete, serializable description of a generated instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    pub dim: usize,
    pub count: usize,
    pub seed: u64,
}

fn random_unit_vector(dim: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let n = norm(&v);
        if n > 1e-6 {
            return v.iter().map(|c| c / n).collect();
        }
    }
}

/// Uniform weights on `count` independent uniform points of the unit sphere.
pub fn random_unit_norm_measure(
    dim: usize,
    count: usize,
    rng: &mut ChaCha8Rng,
) -> Result<DiscreteMeasure> {
    let points = (0..count).map(|_| random_unit_vector(dim, rng)).collect();
    DiscreteMeasure::new(points, vec![1.0 / count as f64; count])
}

/// Gaussian points with random (bounded-ratio) positive weights.
pub fn random_measure(dim: usize, count: usize, rng: &mut ChaCha8Rng) -> Result<DiscreteMeasure> {
    let points = (0..count)
        .map(|_| (0..dim).map(|_| rng.sample(StandardNormal)).collect())
        .collect();
    let raw: Vec<f64> = (0..count).map(|_| rng.gen_range(0.2..1.0)).collect();
    let total: f64 = raw.iter().sum();
    DiscreteMeasure::new(points, raw.iter().map(|w| w / total).collect())
}

/// The uniform measure on the standard orthonormal basis of R^d.
pub fn uniform_onb(dim: usize) -> Result<DiscreteMeasure> {
    let points = (0..dim)
        .map(|i| {
            let mut e = vec![0.0; dim];
            e[i] = 1.0;
            e
        })
        .collect();
    DiscreteMeasure::new(points, vec![1.0 / dim as f64; dim])
}

/// Three unit vectors at 90, 210, and 330 degrees in the plane, uniformly
/// weighted. The smallest equal-norm tight configuration in R².
pub fn mercedes_benz() -> DiscreteMeasure {
    let degrees = [90.0f64, 210.0, 330.0];
    let points = degrees
        .iter()
        .map(|deg| {
            let t = deg.to_radians();
            vec![t.cos(), t.sin()]
        })
        .collect();
    DiscreteMeasure::new(points, vec![1.0 / 3.0; 3])
        .expect("the Mercedes-Benz configuration is a valid measure")
}

/// The uniform harmonic frame: `count` unit-norm points whose coordinates
/// sample cosines and sines of the first harmonics of the circle. Tight for
/// `count > dim` by orthogonality of the trigonometric system.
pub fn harmonic_frame(dim: usize, count: usize) -> Result<DiscreteMeasure> {
    if dim == 0 || count == 0 {
        return Err(Error::PreconditionViolated(
            "harmonic frame needs dim >= 1 and count >= 1".into(),
        ));
    }
    if dim > 1 && count <= dim {
        return Err(Error::PreconditionViolated(format!(
            "harmonic frame in dimension {dim} needs more than {dim} points, got {count}"
        )));
    }
    let n = count as f64;
    let pairs = dim / 2;
    let scale = (2.0 / dim as f64).sqrt();
    let points = (0..count)
        .map(|k| {
            let theta = 2.0 * std::f64::consts::PI * k as f64 / n;
            let mut x = Vec::with_capacity(dim);
            if dim % 2 == 1 {
                // Odd dimension: a constant leading coordinate keeps the
                // norm at 1 while the harmonics fill the remaining pairs.
                x.push(scale / std::f64::consts::SQRT_2);
            }
            for j in 1..=pairs {
                let phase = j as f64 * theta;
                x.push(scale * phase.cos());
                x.push(scale * phase.sin());
            }
            x
        })
        .collect();
    DiscreteMeasure::new(points, vec![1.0 / n; count])
}

/// A Haar-ish random orthogonal matrix as rows, via Gram-Schmidt on
/// Gaussian draws.
pub fn random_rotation(dim: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(dim);
    while rows.len() < dim {
        let mut v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        for row in &rows {
            let c = dot(&v, row);
            for (vc, rc) in v.iter_mut().zip(row) {
                *vc -= c * rc;
            }
        }
        let n = norm(&v);
        if n > 1e-6 {
            rows.push(v.iter().map(|c| c / n).collect());
        }
    }
    rows
}

/// A random tight measure: `groups` rotated orthonormal bases, each with
/// random per-atom scales whose weights are chosen so every group's frame
/// operator is a multiple of the identity. Produces `groups * dim` atoms.
pub fn random_tight_measure(
    dim: usize,
    groups: usize,
    rng: &mut ChaCha8Rng,
) -> Result<DiscreteMeasure> {
    if dim == 0 || groups == 0 {
        return Err(Error::PreconditionViolated(
            "random tight measure needs dim >= 1 and groups >= 1".into(),
        ));
    }
    let masses: Vec<f64> = (0..groups).map(|_| rng.gen_range(0.5..1.5)).collect();
    let mass_total: f64 = masses.iter().sum();
    let mut points = Vec::with_capacity(groups * dim);
    let mut weights = Vec::with_capacity(groups * dim);
    for mass in masses {
        let rotation = random_rotation(dim, rng);
        let scales: Vec<f64> = (0..dim).map(|_| rng.gen_range(0.5..2.0)).collect();
        // Weight w_i proportional to 1/s_i² makes sum w_i s_i² R e_i e_iᵀ Rᵀ
        // a multiple of the identity.
        let inv_sq: Vec<f64> = scales.iter().map(|s| 1.0 / (s * s)).collect();
        let inv_total: f64 = inv_sq.iter().sum();
        for (row, (s, iv)) in rotation.into_iter().zip(scales.iter().zip(&inv_sq)) {
            points.push(row.iter().map(|c| c * s).collect());
            weights.push(mass / mass_total * iv / inv_total);
        }
    }
    DiscreteMeasure::new(points, weights)
}

fn norm_range(mu: &DiscreteMeasure) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for x in mu.points() {
        let n = norm(x);
        lo = lo.min(n);
        hi = hi.max(n);
    }
    (lo, hi)
}

/// Both Paulsen conditions at level `eps`: every point norm in
/// (1-eps, 1+eps), and the frame-operator spectrum inside (1±eps)·A with
/// A = M₂²/d.
pub fn paulsen_conditions(mu: &DiscreteMeasure, eps: f64) -> bool {
    let (lo, hi) = norm_range(mu);
    if lo <= 1.0 - eps || hi >= 1.0 + eps {
        return false;
    }
    let op = mu.frame_operator();
    let a = mu.second_moment_sq() / mu.dim() as f64;
    op.lambda_min() > (1.0 - eps) * a && op.lambda_max() < (1.0 + eps) * a
}

fn flow_to_tight(mu: &DiscreteMeasure) -> Result<DiscreteMeasure> {
    let config = FlowConfig {
        dt: 0.02,
        max_steps: 20_000,
        record_every: usize::MAX,
        ..FlowConfig::default()
    };
    let traj = run_explicit(mu, &config)?;
    if traj.termination == Termination::CollapsedToZero {
        return Err(Error::GenerationFailed { attempts: 1 });
    }
    Ok(traj.final_state().clone())
}

fn normalized_points(mu: &DiscreteMeasure) -> Result<DiscreteMeasure> {
    let points = mu
        .points()
        .iter()
        .map(|x| {
            let n = norm(x);
            x.iter().map(|c| c / n).collect()
        })
        .collect();
    mu.with_points(points)
}

fn rescaled(mu: &DiscreteMeasure, factor: f64) -> Result<DiscreteMeasure> {
    let points = mu
        .points()
        .iter()
        .map(|x| x.iter().map(|c| c * factor).collect())
        .collect();
    mu.with_points(points)
}

/// An eps-almost unit norm, eps-almost tight measure with uniform weights.
///
/// Construction: flow a random unit-norm start to tightness, alternate
/// renormalization and re-flow until the tight configuration is within
/// eps/4 of unit norm, recenter the norms by a global rescale (which
/// preserves tightness exactly), then add a bounded random perturbation,
/// shrinking it until both eps-conditions verify.
pub fn paulsen_instance(
    dim: usize,
    count: usize,
    eps: f64,
    rng: &mut ChaCha8Rng,
) -> Result<DiscreteMeasure> {
    if !(eps.is_finite() && eps > 0.0 && eps < 1.0) {
        return Err(Error::PreconditionViolated(format!(
            "paulsen eps = {eps} must lie strictly between 0 and 1"
        )));
    }
    if count < dim {
        return Err(Error::PreconditionViolated(format!(
            "a tight measure in dimension {dim} needs at least {dim} atoms, got {count}"
        )));
    }
    let margin = eps / 4.0;

    let mut base = random_unit_norm_measure(dim, count, rng)?;
    let mut ready = false;
    for _round in 0..200 {
        base = flow_to_tight(&base)?;
        let (lo, hi) = norm_range(&base);
        // Recenter the norm band around 1 multiplicatively; a global
        // rescale cannot break tightness.
        base = rescaled(&base, 1.0 / (lo * hi).sqrt())?;
        if paulsen_conditions(&base, margin) {
            ready = true;
            break;
        }
        base = normalized_points(&base)?;
        if paulsen_conditions(&base, margin) {
            ready = true;
            break;
        }
    }
    if !ready {
        return Err(Error::GenerationFailed { attempts: 200 });
    }

    let mut size = margin;
    for _attempt in 0..1000 {
        let points: Vec<Vec<f64>> = base
            .points()
            .iter()
            .map(|x| {
                let dir = random_unit_vector(dim, rng);
                let r = size * rng.gen_range(0.0..1.0);
                x.iter().zip(&dir).map(|(c, u)| c + r * u).collect()
            })
            .collect();
        let candidate = base.with_points(points)?;
        if paulsen_conditions(&candidate, eps) {
            return Ok(candidate);
        }
        size *= 0.5;
    }
    Err(Error::GenerationFailed { attempts: 1000 })
}

/// Builds the measure a spec describes. Deterministic for a fixed spec.
pub fn generate(spec: &GeneratorSpec) -> Result<DiscreteMeasure> {
    if let GeneratorKind::FromFile { path } = &spec.kind {
        return io::load_measure(path);
    }
    if spec.dim == 0 || spec.count == 0 {
        return Err(Error::PreconditionViolated(
            "generator needs dim >= 1 and count >= 1".into(),
        ));
    }
    let mut rng = rng_for(spec.seed, 0);
    match &spec.kind {
        GeneratorKind::RandomUnitNorm => random_unit_norm_measure(spec.dim, spec.count, &mut rng),
        GeneratorKind::PerturbedOnb { magnitude } => {
            if !(magnitude.is_finite() && *magnitude >= 0.0) {
                return Err(Error::PreconditionViolated(format!(
                    "perturbation magnitude = {magnitude} must be finite and nonnegative"
                )));
            }
            let points = (0..spec.count)
                .map(|i| {
                    (0..spec.dim)
                        .map(|k| {
                            let base = if k == i % spec.dim { 1.0 } else { 0.0 };
                            base + magnitude * rng.gen_range(-1.0..1.0)
                        })
                        .collect()
                })
                .collect();
            DiscreteMeasure::new(points, vec![1.0 / spec.count as f64; spec.count])
        }
        GeneratorKind::PaulsenInstance { eps } => {
            paulsen_instance(spec.dim, spec.count, *eps, &mut rng)
        }
        GeneratorKind::FromFile { .. } => unreachable!("handled above"),
    }
}
