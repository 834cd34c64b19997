//! Executable numerical checks of the analytic guarantees.
//!
//! Each check compares a computed left-hand side against a bound, returns a
//! [`CheckResult`] whose `holds` is exactly `lhs <= rhs + tol`, and carries
//! a self-contained witness JSON of its inputs. Replaying a witness reruns
//! the identical computation, so a failure report is reproducible on its
//! own, away from the RNG that found it.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::generate::{random_measure, random_tight_measure, random_unit_norm_measure, rng_for};
use crate::linalg::{dot, norm};
use crate::measure::{DiscreteMeasure, TIGHT_TOL};
use crate::potentials;
use crate::transport;

/// Outcome of one check. `holds` is equivalent to `lhs <= rhs + tol` with
/// the check's declared tolerance folded into `slack = rhs + tol - lhs`.
#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub holds: bool,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    /// Inputs, serialized; [`replay`] reruns the check from this value.
    pub witness: Value,
}

impl CheckResult {
    fn new(name: &str, lhs: f64, rhs: f64, tol: f64, witness: Value) -> Self {
        let slack = rhs + tol - lhs;
        CheckResult {
            name: name.to_string(),
            holds: lhs <= rhs + tol,
            lhs,
            rhs,
            slack,
            witness,
        }
    }
}

/// Every check name accepted by [`run_suite`] and [`replay`].
pub const CHECK_NAMES: [&str; 7] = [
    "frame_op_continuity",
    "nearest_tight_bound",
    "tight_iff",
    "tp_operator_bound",
    "subdifferential_expansion",
    "pframe_bound",
    "even_moment_gradient",
];

fn m2(mu: &DiscreteMeasure) -> f64 {
    mu.second_moment_sq().sqrt()
}

/// Frame operators are continuous along W₂: ‖S_ν − S_μ‖ ≤ √6·W₂(μ,ν)·M₂(μ),
/// under the moment hypothesis M₂(ν) ≤ √2·M₂(μ).
pub fn check_frame_op_continuity(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<CheckResult> {
    let m2_mu = m2(mu);
    let m2_nu = m2(nu);
    if m2_nu > std::f64::consts::SQRT_2 * m2_mu {
        return Err(Error::PreconditionViolated(format!(
            "moment hypothesis M2(nu) <= sqrt(2) M2(mu) fails: {m2_nu} > sqrt(2)*{m2_mu}"
        )));
    }
    let (w2, _) = transport::wasserstein_exact(mu, nu, 2.0)?;
    let diff = nu.frame_operator().difference(&mu.frame_operator())?;
    let lhs = diff.operator_norm();
    let rhs = 6.0f64.sqrt() * w2 * m2_mu;
    let witness = json!({ "check": "frame_op_continuity", "mu": mu, "nu": nu });
    Ok(CheckResult::new(
        "frame_op_continuity",
        lhs,
        rhs,
        1e-9,
        witness,
    ))
}

/// Any tight measure ν is at least δ/(4(M₂(μ)+M₂(ν))) away from μ in W₂,
/// where δ is the spectral gap of μ's frame operator.
pub fn check_nearest_tight_bound(
    mu: &DiscreteMeasure,
    nu_tight: &DiscreteMeasure,
) -> Result<CheckResult> {
    if !nu_tight.diagnostics_default().is_tight {
        return Err(Error::PreconditionViolated(
            "nu must be tight for the nearest-tight lower bound".into(),
        ));
    }
    if mu.diagnostics_default().is_tight {
        return Err(Error::PreconditionViolated(
            "mu must be non-tight for the nearest-tight lower bound".into(),
        ));
    }
    let op = mu.frame_operator();
    let delta = op.lambda_max() - op.lambda_min();
    let lhs = delta / (4.0 * (m2(mu) + m2(nu_tight)));
    let (rhs, _) = transport::wasserstein_exact(mu, nu_tight, 2.0)?;
    let witness = json!({ "check": "nearest_tight_bound", "mu": mu, "nu": nu_tight });
    Ok(CheckResult::new(
        "nearest_tight_bound",
        lhs,
        rhs,
        1e-9,
        witness,
    ))
}

/// PFP(μ) = M₂⁴/d exactly when μ is tight. The scalar equality is tested at
/// tolerance d·TIGHT_TOL·M₂⁴ so both sides of the iff use matched
/// thresholds; `holds` means the two classifications agree.
pub fn check_tight_iff(mu: &DiscreteMeasure) -> Result<CheckResult> {
    let m2sq = mu.second_moment_sq();
    if m2sq <= 1e-12 {
        return Err(Error::PreconditionViolated(
            "tight-iff is vacuous at the zero measure".into(),
        ));
    }
    let d = mu.dim() as f64;
    let gap = (potentials::pfp(mu) - m2sq * m2sq / d).abs();
    let tol = d * TIGHT_TOL * m2sq * m2sq;
    let tight = mu.diagnostics_default().is_tight;
    let witness = json!({ "check": "tight_iff", "mu": mu });
    // Orient the inequality by the spectral classification so that
    // holds <=> (gap <= tol) == tight, while keeping slack meaningful.
    let (lhs, rhs) = if tight { (gap, tol) } else { (tol, gap) };
    Ok(CheckResult::new("tight_iff", lhs, rhs, 0.0, witness))
}

/// Operator-norm bound ‖T_μ‖ ≤ √TP(μ); equality exactly at tight measures
/// (all frame-operator eigenvalues equal), flagged in the witness.
pub fn check_tp_operator_bound(mu: &DiscreteMeasure) -> Result<CheckResult> {
    let lhs = potentials::tightness_operator(mu).operator_norm();
    let rhs = potentials::tp_value(mu).max(0.0).sqrt();
    let op = mu.frame_operator();
    let equality = op.lambda_max() - op.lambda_min() <= TIGHT_TOL * op.lambda_max().max(1.0);
    let witness = json!({ "check": "tp_operator_bound", "mu": mu, "equality": equality });
    Ok(CheckResult::new(
        "tp_operator_bound",
        lhs,
        rhs,
        1e-10 * (1.0 + rhs),
        witness,
    ))
}

/// The h values used by the differentiability checks.
pub fn default_h_sequence() -> Vec<f64> {
    vec![1e-2, 1e-3, 1e-4, 1e-5]
}

/// First-order expansion of TP under the push-forward (I + hV)#μ: the
/// residual after subtracting h·Σ wᵢ⟨4T_μxᵢ, Vᵢ⟩ must shrink like h², i.e.
/// its log-log slope over `h_sequence` is at least 1.9. Residuals at the
/// rounding floor are excluded from the fit; if none remain the expansion
/// is exact to rounding and the check holds vacuously.
pub fn check_subdifferential_expansion(
    mu: &DiscreteMeasure,
    direction_field: &[Vec<f64>],
    h_sequence: &[f64],
) -> Result<CheckResult> {
    if direction_field.len() != mu.len() {
        return Err(Error::DimensionMismatch {
            expected: mu.len(),
            found: direction_field.len(),
        });
    }
    for v in direction_field {
        if v.len() != mu.dim() {
            return Err(Error::DimensionMismatch {
                expected: mu.dim(),
                found: v.len(),
            });
        }
        if v.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFiniteInput("direction field"));
        }
    }
    if h_sequence.is_empty() || h_sequence.iter().any(|&h| !(h.is_finite() && h > 0.0)) {
        return Err(Error::PreconditionViolated(
            "h sequence must be nonempty and positive".into(),
        ));
    }

    let tp0 = potentials::tp_value(mu);
    let grad = potentials::tp_gradient(mu);
    let derivative: f64 = grad
        .vectors()
        .iter()
        .zip(mu.weights())
        .zip(direction_field)
        .map(|((f, &w), v)| w * dot(f, v))
        .sum();

    let floor = 1e-14 * (1.0 + tp0.abs());
    let mut points_fit = Vec::new();
    for &h in h_sequence {
        let moved: Vec<Vec<f64>> = mu
            .points()
            .iter()
            .zip(direction_field)
            .map(|(x, v)| x.iter().zip(v).map(|(c, vc)| c + h * vc).collect())
            .collect();
        let tp_h = potentials::tp_value(&mu.with_points(moved)?);
        let residual = (tp_h - tp0 - h * derivative).abs();
        if residual > floor {
            points_fit.push((h.ln(), residual.ln()));
        }
    }

    let witness = json!({
        "check": "subdifferential_expansion",
        "mu": mu,
        "direction_field": direction_field,
        "h_sequence": h_sequence,
    });
    let threshold = 1.9;
    if points_fit.len() < 2 {
        // All residuals at rounding scale: second-order term invisible.
        return Ok(CheckResult::new(
            "subdifferential_expansion",
            threshold,
            threshold,
            0.0,
            witness,
        ));
    }
    let n = points_fit.len() as f64;
    let mean_x: f64 = points_fit.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y: f64 = points_fit.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points_fit
        .iter()
        .map(|p| (p.0 - mean_x) * (p.1 - mean_y))
        .sum();
    let sxx: f64 = points_fit.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let slope = sxy / sxx;
    Ok(CheckResult::new(
        "subdifferential_expansion",
        threshold,
        slope,
        0.0,
        witness,
    ))
}

/// Sharp p-frame bound PFP_p(μ) ≥ c_p·(M_p^p)²; near-equality is flagged in
/// the witness (it certifies an almost-tight p-frame).
pub fn check_pframe_bound(mu: &DiscreteMeasure, p: u32) -> Result<CheckResult> {
    let report = potentials::pframe_potential(mu, p)?;
    let lhs = report.lower_bound;
    let rhs = report.value;
    let equality = report.gap.abs() <= 1e-6 * (1.0 + rhs.abs());
    let witness = json!({ "check": "pframe_bound", "mu": mu, "p": p, "equality": equality });
    Ok(CheckResult::new(
        "pframe_bound",
        lhs,
        rhs,
        1e-9 * (1.0 + rhs.abs()),
        witness,
    ))
}

/// The even moment M₂^{2k} is differentiable with per-atom Euclidean
/// gradient 2k·M₂^{2(k-1)}·wᵢxᵢ; central finite differences must match to
/// relative 1e-5.
pub fn check_even_moment_gradient(mu: &DiscreteMeasure, k: u32) -> Result<CheckResult> {
    let analytic = potentials::even_moment_gradient(mu, k)?.euclidean();
    let scale = analytic
        .iter()
        .flat_map(|row| row.iter().map(|c| c.abs()))
        .fold(0.0, f64::max)
        .max(1e-8);

    let value_of = |points: Vec<Vec<f64>>| -> Result<f64> {
        Ok(mu.with_points(points)?.second_moment_sq().powi(k as i32))
    };
    let h = 1e-6;
    let mut worst = 0.0f64;
    for i in 0..mu.len() {
        for c in 0..mu.dim() {
            let mut plus = mu.points().to_vec();
            plus[i][c] += h;
            let mut minus = mu.points().to_vec();
            minus[i][c] -= h;
            let fd = (value_of(plus)? - value_of(minus)?) / (2.0 * h);
            worst = worst.max((fd - analytic[i][c]).abs() / scale);
        }
    }
    let witness = json!({ "check": "even_moment_gradient", "mu": mu, "k": k });
    Ok(CheckResult::new(
        "even_moment_gradient",
        worst,
        1e-5,
        0.0,
        witness,
    ))
}

/// Reruns the check a witness came from; the result matches the original
/// bit for bit.
pub fn replay(witness: &Value) -> Result<CheckResult> {
    let name = witness["check"]
        .as_str()
        .ok_or_else(|| Error::Parse("witness is missing the \"check\" name".into()))?;
    let measure_at = |key: &str| -> Result<DiscreteMeasure> {
        serde_json::from_value(witness[key].clone())
            .map_err(|e| Error::Parse(format!("witness field {key:?}: {e}")))
    };
    match name {
        "frame_op_continuity" => check_frame_op_continuity(&measure_at("mu")?, &measure_at("nu")?),
        "nearest_tight_bound" => check_nearest_tight_bound(&measure_at("mu")?, &measure_at("nu")?),
        "tight_iff" => check_tight_iff(&measure_at("mu")?),
        "tp_operator_bound" => check_tp_operator_bound(&measure_at("mu")?),
        "subdifferential_expansion" => {
            let field: Vec<Vec<f64>> = serde_json::from_value(witness["direction_field"].clone())
                .map_err(|e| Error::Parse(format!("witness direction_field: {e}")))?;
            let hs: Vec<f64> = serde_json::from_value(witness["h_sequence"].clone())
                .map_err(|e| Error::Parse(format!("witness h_sequence: {e}")))?;
            check_subdifferential_expansion(&measure_at("mu")?, &field, &hs)
        }
        "pframe_bound" => {
            let p = witness["p"]
                .as_u64()
                .ok_or_else(|| Error::Parse("witness is missing p".into()))?;
            check_pframe_bound(&measure_at("mu")?, p as u32)
        }
        "even_moment_gradient" => {
            let k = witness["k"]
                .as_u64()
                .ok_or_else(|| Error::Parse("witness is missing k".into()))?;
            check_even_moment_gradient(&measure_at("mu")?, k as u32)
        }
        other => Err(Error::Parse(format!("unknown check name {other:?}"))),
    }
}

fn random_direction_field(mu: &DiscreteMeasure, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut field: Vec<Vec<f64>> = (0..mu.len())
        .map(|_| (0..mu.dim()).map(|_| rng.sample(StandardNormal)).collect())
        .collect();
    let max = field.iter().map(|v| norm(v)).fold(0.0, f64::max);
    if max > 1.0 {
        for v in &mut field {
            for c in v.iter_mut() {
                *c /= max;
            }
        }
    }
    field
}

fn suite_instance(name: &str, seed: u64) -> Result<CheckResult> {
    match name {
        "frame_op_continuity" => {
            let mut rng = rng_for(seed, 1);
            let d = rng.gen_range(2..=5);
            let mu = random_measure(d, rng.gen_range(2..=20), &mut rng)?;
            let mut nu = random_measure(d, rng.gen_range(2..=20), &mut rng)?;
            let mut tries = 0;
            while m2(&nu) > std::f64::consts::SQRT_2 * m2(&mu) && tries < 100 {
                nu = random_measure(d, rng.gen_range(2..=20), &mut rng)?;
                tries += 1;
            }
            if m2(&nu) > std::f64::consts::SQRT_2 * m2(&mu) {
                // Rescaling enforces the moment hypothesis deterministically.
                let factor = m2(&mu) / m2(&nu);
                let points = nu
                    .points()
                    .iter()
                    .map(|x| x.iter().map(|c| c * factor).collect())
                    .collect();
                nu = nu.with_points(points)?;
            }
            check_frame_op_continuity(&mu, &nu)
        }
        "nearest_tight_bound" => {
            let mut rng = rng_for(seed, 2);
            let d = rng.gen_range(2..=5);
            let mut mu = random_measure(d, rng.gen_range(2..=20), &mut rng)?;
            while mu.diagnostics_default().is_tight {
                mu = random_measure(d, rng.gen_range(2..=20), &mut rng)?;
            }
            let nu = random_tight_measure(d, rng.gen_range(1..=3), &mut rng)?;
            check_nearest_tight_bound(&mu, &nu)
        }
        "tight_iff" => {
            let mut rng = rng_for(seed, 3);
            let d = rng.gen_range(2..=5);
            let mu = if seed.is_multiple_of(2) {
                random_tight_measure(d, rng.gen_range(1..=3), &mut rng)?
            } else {
                random_measure(d, rng.gen_range(2..=20), &mut rng)?
            };
            check_tight_iff(&mu)
        }
        "tp_operator_bound" => {
            let mut rng = rng_for(seed, 4);
            let d = rng.gen_range(2..=5);
            let mu = random_measure(d, rng.gen_range(2..=20), &mut rng)?;
            check_tp_operator_bound(&mu)
        }
        "subdifferential_expansion" => {
            let mut rng = rng_for(seed, 5);
            let d = rng.gen_range(2..=5);
            let mu = random_measure(d, rng.gen_range(2..=12), &mut rng)?;
            let field = random_direction_field(&mu, &mut rng);
            check_subdifferential_expansion(&mu, &field, &default_h_sequence())
        }
        "pframe_bound" => {
            let mut rng = rng_for(seed, 6);
            let mu = random_unit_norm_measure(2, rng.gen_range(3..=24), &mut rng)?;
            check_pframe_bound(&mu, 4)
        }
        "even_moment_gradient" => {
            let mut rng = rng_for(seed, 7);
            let d = rng.gen_range(2..=5);
            let mu = random_measure(d, rng.gen_range(2..=12), &mut rng)?;
            check_even_moment_gradient(&mu, 1 + (seed % 3) as u32)
        }
        other => Err(Error::Parse(format!("unknown check name {other:?}"))),
    }
}

/// Runs `seeds` seeded instances of one named check, or of every check for
/// `which = "all"`. Instances are generated on isolated RNG streams, so the
/// suite is deterministic in (which, seeds).
pub fn run_suite(which: &str, seeds: u64) -> Result<Vec<CheckResult>> {
    let selected: Vec<&str> = if which == "all" {
        CHECK_NAMES.to_vec()
    } else if CHECK_NAMES.contains(&which) {
        vec![which]
    } else {
        return Err(Error::Parse(format!(
            "unknown suite {which:?}; expected \"all\" or one of {CHECK_NAMES:?}"
        )));
    };
    let mut results = Vec::with_capacity(selected.len() * seeds as usize);
    for seed in 0..seeds {
        for name in &selected {
            results.push(suite_instance(name, seed)?);
        }
    }
    Ok(results)
}
