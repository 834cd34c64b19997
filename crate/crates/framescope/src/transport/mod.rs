//! Discrete optimal transport between finitely supported measures.
//!
//! Two solvers: a transportation simplex for exact `W_p` (vertex plans,
//! deterministic tie-breaking) and a log-domain Sinkhorn iteration for an
//! entropically regularized upper bound. Plans carry their support points,
//! so re-costing a plan under a different exponent needs nothing else.

mod simplex;
mod sinkhorn;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{csum, dist, CompensatedSum};
use crate::measure::DiscreteMeasure;

/// Atoms lighter than this are dropped before solving; they only feed LP
/// degeneracy and contribute below rounding to any cost.
const PRUNE_TOL: f64 = 1e-15;

/// ‖x−y‖^p as exp(p·ln‖x−y‖), guarded so a zero distance never produces
/// 0·ln 0.
fn pow_cost(d: f64, p: f64) -> f64 {
    if d < 1e-300 {
        0.0
    } else {
        (p * d.ln()).exp()
    }
}

/// Which solver produced a plan.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PlanMethod {
    Exact,
    Entropic { reg: f64 },
}

/// Serde shadow: deserialized blindly, then validated into a TransportPlan.
#[derive(Serialize, Deserialize)]
struct RawPlan {
    rows: usize,
    cols: usize,
    p: f64,
    cost: f64,
    method: PlanMethod,
    source_points: Vec<Vec<f64>>,
    target_points: Vec<Vec<f64>>,
    coupling: Vec<Vec<f64>>,
}

/// A coupling between two discrete measures together with its transport
/// cost. `cost` is the raw p-cost `Σ γ_ij ‖x_i − y_j‖^p`; the associated
/// distance is `cost^{1/p}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "RawPlan", into = "RawPlan")]
pub struct TransportPlan {
    rows: usize,
    cols: usize,
    p: f64,
    cost: f64,
    method: PlanMethod,
    source_points: Vec<Vec<f64>>,
    target_points: Vec<Vec<f64>>,
    coupling: Vec<Vec<f64>>,
}

impl From<TransportPlan> for RawPlan {
    fn from(plan: TransportPlan) -> Self {
        RawPlan {
            rows: plan.rows,
            cols: plan.cols,
            p: plan.p,
            cost: plan.cost,
            method: plan.method,
            source_points: plan.source_points,
            target_points: plan.target_points,
            coupling: plan.coupling,
        }
    }
}

impl TryFrom<RawPlan> for TransportPlan {
    type Error = Error;

    fn try_from(raw: RawPlan) -> Result<Self> {
        if raw.rows != raw.source_points.len() || raw.cols != raw.target_points.len() {
            return Err(Error::Parse(
                "plan rows/cols fields disagree with the stored points".into(),
            ));
        }
        let plan = TransportPlan::new(
            raw.source_points,
            raw.target_points,
            raw.coupling,
            raw.p,
            raw.method,
        )?;
        // The stored cost is derived data; a disagreement means the file was
        // edited or truncated.
        if (raw.cost - plan.cost).abs() > 1e-9 * (1.0 + plan.cost.abs()) {
            return Err(Error::Parse(format!(
                "stored cost {} disagrees with recomputed cost {}",
                raw.cost, plan.cost
            )));
        }
        Ok(plan)
    }
}

impl TransportPlan {
    /// Builds a plan from explicit parts, recomputing the cost. The coupling
    /// does not have to be optimal, only rectangular, finite, and free of
    /// entries below -1e-15 (rounding-level negatives are clamped to zero).
    pub fn new(
        source_points: Vec<Vec<f64>>,
        target_points: Vec<Vec<f64>>,
        coupling: Vec<Vec<f64>>,
        p: f64,
        method: PlanMethod,
    ) -> Result<Self> {
        if source_points.is_empty() || target_points.is_empty() {
            return Err(Error::EmptyMeasure);
        }
        if !(p.is_finite() && p >= 1.0) {
            return Err(Error::InvalidExponent { p });
        }
        let dim = source_points[0].len();
        for x in source_points.iter().chain(target_points.iter()) {
            if x.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: x.len(),
                });
            }
            if x.iter().any(|c| !c.is_finite()) {
                return Err(Error::NonFiniteInput("plan support point"));
            }
        }
        let (n, m) = (source_points.len(), target_points.len());
        if coupling.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: coupling.len(),
            });
        }
        let mut coupling = coupling;
        for row in coupling.iter_mut() {
            if row.len() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    found: row.len(),
                });
            }
            for g in row.iter_mut() {
                if !g.is_finite() {
                    return Err(Error::NonFiniteInput("coupling entry"));
                }
                if *g < -1e-15 {
                    return Err(Error::PreconditionViolated(format!(
                        "coupling entry {g} is negative beyond rounding"
                    )));
                }
                if *g < 0.0 {
                    *g = 0.0;
                }
            }
        }
        let cost = coupling_cost(&source_points, &target_points, &coupling, p);
        Ok(TransportPlan {
            rows: n,
            cols: m,
            p,
            cost,
            method,
            source_points,
            target_points,
            coupling,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Cost exponent the plan was solved under.
    pub fn exponent(&self) -> f64 {
        self.p
    }

    /// Raw p-cost `Σ γ_ij ‖x_i − y_j‖^p`.
    pub fn cost(&self) -> f64 {
        self.cost
    }

    /// `cost^{1/p}`, the W_p value when the plan is optimal.
    pub fn distance(&self) -> f64 {
        if self.cost <= 0.0 {
            0.0
        } else {
            (self.cost.ln() / self.p).exp()
        }
    }

    pub fn method(&self) -> PlanMethod {
        self.method
    }

    pub fn coupling(&self) -> &[Vec<f64>] {
        &self.coupling
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.coupling[i][j]
    }

    pub fn source_points(&self) -> &[Vec<f64>] {
        &self.source_points
    }

    pub fn target_points(&self) -> &[Vec<f64>] {
        &self.target_points
    }

    /// Row sums: the source marginal the coupling actually satisfies.
    pub fn row_marginals(&self) -> Vec<f64> {
        self.coupling
            .iter()
            .map(|row| csum(row.iter().copied()))
            .collect()
    }

    /// Column sums: the target marginal the coupling actually satisfies.
    pub fn col_marginals(&self) -> Vec<f64> {
        (0..self.cols)
            .map(|j| {
                let mut acc = CompensatedSum::new();
                for row in &self.coupling {
                    acc.add(row[j]);
                }
                acc.value()
            })
            .collect()
    }

    /// Strictly positive entries as (i, j, mass), row-major order.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for (i, row) in self.coupling.iter().enumerate() {
            for (j, &g) in row.iter().enumerate() {
                if g > 0.0 {
                    out.push((i, j, g));
                }
            }
        }
        out
    }
}

/// Compensated `Σ γ_ij ‖x_i − y_j‖^p` over a dense coupling.
fn coupling_cost(xs: &[Vec<f64>], ys: &[Vec<f64>], coupling: &[Vec<f64>], p: f64) -> f64 {
    let mut acc = CompensatedSum::new();
    for (x, row) in xs.iter().zip(coupling) {
        for (y, &g) in ys.iter().zip(row) {
            if g > 0.0 {
                acc.add(g * pow_cost(dist(x, y), p));
            }
        }
    }
    acc.value().max(0.0)
}

/// Pruned balanced instance shared by both solvers.
struct Instance {
    keep_rows: Vec<usize>,
    keep_cols: Vec<usize>,
    supply: Vec<f64>,
    demand: Vec<f64>,
    cost: Vec<f64>,
}

fn build_instance(mu: &DiscreteMeasure, nu: &DiscreteMeasure, p: f64) -> Result<Instance> {
    if mu.dim() != nu.dim() {
        return Err(Error::DimensionMismatch {
            expected: mu.dim(),
            found: nu.dim(),
        });
    }
    if !(p.is_finite() && p >= 1.0) {
        return Err(Error::InvalidExponent { p });
    }
    let keep = |weights: &[f64]| -> Vec<usize> {
        weights
            .iter()
            .enumerate()
            .filter(|&(_, &w)| w >= PRUNE_TOL)
            .map(|(i, _)| i)
            .collect()
    };
    let keep_rows = keep(mu.weights());
    let keep_cols = keep(nu.weights());
    if keep_rows.is_empty() || keep_cols.is_empty() {
        return Err(Error::SolverFailure(
            "all atoms fell below the support pruning threshold".into(),
        ));
    }
    let supply: Vec<f64> = keep_rows.iter().map(|&i| mu.weight(i)).collect();
    let demand: Vec<f64> = keep_cols.iter().map(|&j| nu.weight(j)).collect();
    let mut cost = Vec::with_capacity(keep_rows.len() * keep_cols.len());
    for &i in &keep_rows {
        for &j in &keep_cols {
            cost.push(pow_cost(dist(mu.point(i), nu.point(j)), p));
        }
    }
    Ok(Instance {
        keep_rows,
        keep_cols,
        supply,
        demand,
        cost,
    })
}

/// Re-embeds a pruned flow into the full atom index space and finishes the
/// plan. Pruned atoms get zero rows/columns, within the marginal tolerance
/// by the pruning threshold.
fn assemble_plan(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    p: f64,
    method: PlanMethod,
    inst: &Instance,
    flow: &[f64],
) -> Result<(f64, TransportPlan)> {
    let mk = inst.keep_cols.len();
    let mut coupling = vec![vec![0.0; nu.len()]; mu.len()];
    for (a, &i) in inst.keep_rows.iter().enumerate() {
        for (b, &j) in inst.keep_cols.iter().enumerate() {
            coupling[i][j] = flow[a * mk + b];
        }
    }
    let plan = TransportPlan::new(
        mu.points().to_vec(),
        nu.points().to_vec(),
        coupling,
        p,
        method,
    )?;
    Ok((plan.distance(), plan))
}

/// Exact W_p via the transportation simplex. Returns `(distance, plan)`
/// where the plan is a vertex of the transportation polytope; ties among
/// degenerate optima resolve deterministically.
pub fn wasserstein_exact(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    p: f64,
) -> Result<(f64, TransportPlan)> {
    let inst = build_instance(mu, nu, p)?;
    let flow = simplex::solve(
        inst.keep_rows.len(),
        inst.keep_cols.len(),
        &inst.supply,
        &inst.demand,
        &inst.cost,
    )?;
    assemble_plan(mu, nu, p, PlanMethod::Exact, &inst, &flow)
}

/// Entropically regularized transport. Runs log-domain Sinkhorn until the
/// marginal drift falls below `tol`, then rounds the coupling onto the
/// transportation polytope, so the returned plan is exactly feasible and its
/// cost is a true upper bound on the exact one. The log-domain form keeps
/// `reg` down to 1e-4 safe on unit-scale data.
pub fn wasserstein_entropic(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    p: f64,
    reg: f64,
    max_iter: usize,
    tol: f64,
) -> Result<(f64, TransportPlan)> {
    if !(reg.is_finite() && reg > 0.0) {
        return Err(Error::InvalidRegularization { reg });
    }
    let inst = build_instance(mu, nu, p)?;
    let out = sinkhorn::solve(
        inst.keep_rows.len(),
        inst.keep_cols.len(),
        &inst.supply,
        &inst.demand,
        &inst.cost,
        reg,
        max_iter,
        tol,
    )?;
    assemble_plan(mu, nu, p, PlanMethod::Entropic { reg }, &inst, &out.coupling)
}

/// Evaluates `(Σ γ_ij ‖x_i − y_j‖^q)^{1/q}` on the plan's own support. For
/// q = plan.p and an exact plan this is the Wasserstein distance; for any
/// feasible plan it upper-bounds W_q of the plan's marginals.
pub fn plan_cost(plan: &TransportPlan, q: f64) -> Result<f64> {
    if !(q.is_finite() && q >= 1.0) {
        return Err(Error::InvalidExponent { p: q });
    }
    let raw = coupling_cost(&plan.source_points, &plan.target_points, &plan.coupling, q);
    Ok(if raw <= 0.0 {
        0.0
    } else {
        (raw.ln() / q).exp()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::DiscreteMeasure;

    fn measure(points: Vec<Vec<f64>>, weights: Vec<f64>) -> DiscreteMeasure {
        DiscreteMeasure::new(points, weights).unwrap()
    }

    fn equal_weight(points: Vec<Vec<f64>>) -> DiscreteMeasure {
        let n = points.len();
        measure(points, vec![1.0 / n as f64; n])
    }

    /// Minimum cost over all permutation couplings of two equal-weight
    /// measures, using the same guarded power as the solver.
    fn permutation_oracle(mu: &DiscreteMeasure, nu: &DiscreteMeasure, p: f64) -> f64 {
        fn go(
            mu: &DiscreteMeasure,
            nu: &DiscreteMeasure,
            p: f64,
            used: &mut Vec<bool>,
            perm: &mut Vec<usize>,
            best: &mut f64,
        ) {
            let i = perm.len();
            if i == mu.len() {
                let w = 1.0 / mu.len() as f64;
                let cost: f64 = perm
                    .iter()
                    .enumerate()
                    .map(|(i, &j)| w * pow_cost(dist(mu.point(i), nu.point(j)), p))
                    .sum();
                if cost < *best {
                    *best = cost;
                }
                return;
            }
            for j in 0..nu.len() {
                if !used[j] {
                    used[j] = true;
                    perm.push(j);
                    go(mu, nu, p, used, perm, best);
                    perm.pop();
                    used[j] = false;
                }
            }
        }
        let mut best = f64::INFINITY;
        go(
            mu,
            nu,
            p,
            &mut vec![false; nu.len()],
            &mut Vec::new(),
            &mut best,
        );
        best
    }

    #[test]
    fn dirac_pair_distance_is_euclidean_for_all_p() {
        let mu = DiscreteMeasure::dirac(vec![1.0, 2.0]).unwrap();
        let nu = DiscreteMeasure::dirac(vec![4.0, 6.0]).unwrap();
        for p in [1.0, 1.5, 2.0, 3.0, 4.0] {
            let (d, plan) = wasserstein_exact(&mu, &nu, p).unwrap();
            assert!((d - 5.0).abs() < 1e-12, "p={p}: got {d}");
            assert!((plan.entry(0, 0) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn self_distance_is_zero_with_diagonal_plan() {
        let mu = equal_weight(vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, -1.0]]);
        let (d, plan) = wasserstein_exact(&mu, &mu, 2.0).unwrap();
        assert!(d <= 1e-12);
        for i in 0..3 {
            assert!((plan.entry(i, i) - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn four_atom_instances_match_permutation_oracle() {
        // Fixed pseudo-random clouds; equal weights make vertex plans
        // permutations (Birkhoff), so brute force over all 24 is exact.
        let mu = equal_weight(vec![
            vec![0.12, -0.88],
            vec![1.31, 0.42],
            vec![-0.73, 0.55],
            vec![0.04, 1.97],
        ]);
        let nu = equal_weight(vec![
            vec![-1.02, 0.33],
            vec![0.88, 0.91],
            vec![0.47, -1.16],
            vec![-0.11, 0.02],
        ]);
        for p in [1.0, 2.0, 3.0] {
            let (_, plan) = wasserstein_exact(&mu, &nu, p).unwrap();
            let oracle = permutation_oracle(&mu, &nu, p);
            assert!(
                (plan.cost() - oracle).abs() <= 1e-12,
                "p={p}: {} vs oracle {}",
                plan.cost(),
                oracle
            );
        }
    }

    #[test]
    fn two_by_two_unequal_weights_closed_form() {
        // With marginals (a, 1-a) and (b, 1-b) the only free parameter is
        // f00; the optimum sits at an endpoint of its feasible interval.
        let mu = measure(vec![vec![0.0], vec![1.0]], vec![0.3, 0.7]);
        let nu = measure(vec![vec![0.25], vec![0.9]], vec![0.6, 0.4]);
        let (_, plan) = wasserstein_exact(&mu, &nu, 2.0).unwrap();
        let c = |i: usize, j: usize| pow_cost(dist(mu.point(i), nu.point(j)), 2.0);
        let eval = |f00: f64| {
            c(0, 0) * f00
                + c(0, 1) * (0.3 - f00)
                + c(1, 0) * (0.6 - f00)
                + c(1, 1) * (0.1 + f00)
        };
        let lo = 0.0f64.max(0.3 + 0.6 - 1.0);
        let hi = 0.3f64.min(0.6);
        let best = eval(lo).min(eval(hi));
        assert!((plan.cost() - best).abs() < 1e-12);
    }

    #[test]
    fn marginals_honor_the_measures() {
        let mu = measure(
            vec![vec![0.0, 0.0], vec![2.0, 1.0], vec![-1.0, 3.0]],
            vec![0.2, 0.5, 0.3],
        );
        let nu = measure(vec![vec![1.0, 1.0], vec![-2.0, 0.5]], vec![0.45, 0.55]);
        let (_, plan) = wasserstein_exact(&mu, &nu, 2.0).unwrap();
        for (got, &want) in plan.row_marginals().iter().zip(mu.weights()) {
            assert!((got - want).abs() < 1e-9);
        }
        for (got, &want) in plan.col_marginals().iter().zip(nu.weights()) {
            assert!((got - want).abs() < 1e-9);
        }
    }

    #[test]
    fn symmetry_and_triangle_inequality() {
        let a = equal_weight(vec![vec![0.0, 0.0], vec![1.0, 0.2]]);
        let b = equal_weight(vec![vec![0.4, -0.3], vec![1.5, 0.8]]);
        let c = equal_weight(vec![vec![-0.7, 0.1], vec![0.9, 1.4]]);
        let (dab, _) = wasserstein_exact(&a, &b, 2.0).unwrap();
        let (dba, _) = wasserstein_exact(&b, &a, 2.0).unwrap();
        assert!((dab - dba).abs() <= 1e-9);
        let (dbc, _) = wasserstein_exact(&b, &c, 2.0).unwrap();
        let (dac, _) = wasserstein_exact(&a, &c, 2.0).unwrap();
        assert!(dac <= dab + dbc + 1e-9);
    }

    #[test]
    fn wp_is_monotone_in_p() {
        let a = equal_weight(vec![vec![0.0, 0.1], vec![1.2, -0.4], vec![0.3, 0.9]]);
        let b = equal_weight(vec![vec![0.5, 0.5], vec![-0.8, 0.2], vec![1.1, 1.3]]);
        let mut prev = 0.0;
        for p in [1.0, 2.0, 3.0, 4.0] {
            let (d, _) = wasserstein_exact(&a, &b, p).unwrap();
            assert!(d >= prev - 1e-9, "W_{p} = {d} < previous {prev}");
            prev = d;
        }
    }

    #[test]
    fn dimension_mismatch_and_bad_exponent_are_rejected() {
        let mu = DiscreteMeasure::dirac(vec![0.0, 0.0]).unwrap();
        let nu = DiscreteMeasure::dirac(vec![0.0, 0.0, 0.0]).unwrap();
        assert!(matches!(
            wasserstein_exact(&mu, &nu, 2.0),
            Err(Error::DimensionMismatch { .. })
        ));
        let nu2 = DiscreteMeasure::dirac(vec![1.0, 1.0]).unwrap();
        assert!(matches!(
            wasserstein_exact(&mu, &nu2, 0.5),
            Err(Error::InvalidExponent { .. })
        ));
    }

    #[test]
    fn negligible_atoms_are_pruned_but_reported() {
        // The 1e-16 atom is below the pruning threshold; the plan keeps its
        // row (all zeros) so indices still line up with the measure.
        let mut weights = vec![0.5, 0.5, 1e-16];
        let sum: f64 = weights.iter().sum();
        for w in weights.iter_mut() {
            *w /= sum;
        }
        let mu = measure(
            vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![50.0, 50.0]],
            weights,
        );
        let nu = equal_weight(vec![vec![0.0, 0.0], vec![1.0, 0.0]]);
        let (d, plan) = wasserstein_exact(&mu, &nu, 2.0).unwrap();
        assert!(d < 1e-7, "distant dust atom should not ship anywhere: {d}");
        assert!(plan.row_marginals()[2].abs() == 0.0);
        assert_eq!(plan.rows(), 3);
    }

    #[test]
    fn entropic_self_distance_is_small_at_reg_1e3() {
        let mu = equal_weight(vec![vec![1.0, 0.0], vec![-0.5, 0.75], vec![-0.5, -0.75]]);
        let (_, plan) = wasserstein_entropic(&mu, &mu, 2.0, 1e-3, 100_000, 1e-8).unwrap();
        assert!(plan.cost() <= 1e-2, "cost {}", plan.cost());
        for (got, &want) in plan.row_marginals().iter().zip(mu.weights()) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn entropic_upper_bounds_exact() {
        let mu = equal_weight(vec![vec![0.0, 0.0], vec![1.0, 0.3], vec![0.2, 1.1]]);
        let nu = equal_weight(vec![vec![1.4, 0.6], vec![2.1, 1.2], vec![1.8, 2.0]]);
        let (_, exact) = wasserstein_exact(&mu, &nu, 2.0).unwrap();
        let (_, ent) = wasserstein_entropic(&mu, &nu, 2.0, 1e-3, 1_000_000, 1e-6).unwrap();
        // The rounded plan is exactly feasible, so its cost can only sit
        // above the optimum.
        assert!(ent.cost() >= exact.cost() - 1e-12);
        assert!(
            (ent.cost() - exact.cost()).abs() <= 0.01 * exact.cost(),
            "entropic {} vs exact {}",
            ent.cost(),
            exact.cost()
        );
    }

    #[test]
    fn zero_or_negative_reg_is_rejected() {
        let mu = DiscreteMeasure::dirac(vec![0.0]).unwrap();
        for reg in [0.0, -1.0, f64::NAN] {
            assert!(matches!(
                wasserstein_entropic(&mu, &mu, 2.0, reg, 10, 1e-6),
                Err(Error::InvalidRegularization { .. })
            ));
        }
    }

    #[test]
    fn plan_cost_on_diagonal_plan_is_zero() {
        let mu = equal_weight(vec![vec![0.3, 0.4], vec![-0.2, 0.9]]);
        let (_, plan) = wasserstein_exact(&mu, &mu, 2.0).unwrap();
        assert!(plan_cost(&plan, 2.0).unwrap() <= 1e-12);
        assert!(plan_cost(&plan, 3.0).unwrap() <= 1e-12);
    }

    #[test]
    fn plan_cost_at_solved_exponent_recovers_distance() {
        let mu = equal_weight(vec![vec![0.0, 0.0], vec![1.0, 1.0]]);
        let nu = equal_weight(vec![vec![2.0, 0.5], vec![-1.0, 0.25]]);
        for p in [1.0, 2.0, 3.0] {
            let (d, plan) = wasserstein_exact(&mu, &nu, p).unwrap();
            assert!((plan_cost(&plan, p).unwrap() - d).abs() <= 1e-12);
        }
    }

    #[test]
    fn antidiagonal_plan_costs_at_least_the_optimum() {
        // Both vertex plans of a 2x2 equal-weight instance: diagonal is
        // optimal here, anti-diagonal is the other vertex.
        let xs = vec![vec![0.0, 0.0], vec![1.0, 0.0]];
        let ys = vec![vec![0.1, 0.0], vec![1.1, 0.0]];
        let mu = equal_weight(xs.clone());
        let nu = equal_weight(ys.clone());
        let (d, _) = wasserstein_exact(&mu, &nu, 2.0).unwrap();
        let anti = TransportPlan::new(
            xs,
            ys,
            vec![vec![0.0, 0.5], vec![0.5, 0.0]],
            2.0,
            PlanMethod::Exact,
        )
        .unwrap();
        assert!(plan_cost(&anti, 2.0).unwrap() >= d - 1e-12);
    }

    #[test]
    fn plan_cost_rejects_exponent_below_one() {
        let mu = DiscreteMeasure::dirac(vec![0.0]).unwrap();
        let (_, plan) = wasserstein_exact(&mu, &mu, 2.0).unwrap();
        assert!(matches!(
            plan_cost(&plan, 0.3),
            Err(Error::InvalidExponent { .. })
        ));
    }

    #[test]
    fn plan_json_roundtrip_is_lossless() {
        let mu = equal_weight(vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
        let nu = equal_weight(vec![vec![0.5, 0.5], vec![-0.5, 1.5]]);
        let (_, plan) = wasserstein_exact(&mu, &nu, 2.0).unwrap();
        let text = serde_json::to_string(&plan).unwrap();
        let back: TransportPlan = serde_json::from_str(&text).unwrap();
        assert_eq!(plan.coupling(), back.coupling());
        assert_eq!(plan.cost(), back.cost());
        assert_eq!(plan.method(), back.method());
    }

    #[test]
    fn corrupted_plan_json_is_rejected() {
        let mu = equal_weight(vec![vec![0.0], vec![1.0]]);
        let (_, plan) = wasserstein_exact(&mu, &mu, 2.0).unwrap();
        let mut value = serde_json::to_value(&plan).unwrap();
        value["cost"] = serde_json::json!(3.5);
        assert!(serde_json::from_value::<TransportPlan>(value.clone()).is_err());
        value["cost"] = serde_json::json!(0.0);
        value["coupling"][0] = serde_json::json!([-0.5, 1.0]);
        assert!(serde_json::from_value::<TransportPlan>(value).is_err());
    }

    #[test]
    fn triplets_skip_zero_entries() {
        let mu = equal_weight(vec![vec![0.0], vec![1.0]]);
        let (_, plan) = wasserstein_exact(&mu, &mu, 2.0).unwrap();
        let trips = plan.triplets();
        assert_eq!(trips.len(), 2);
        assert_eq!(trips[0].0, trips[0].1);
        assert_eq!(trips[1].0, trips[1].1);
    }
}
