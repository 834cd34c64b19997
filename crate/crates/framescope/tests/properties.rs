//! Randomized algebraic and metric properties, cross-checked between
//! modules. Case counts are kept small per property; the seeded `verify`
//! suite and the acceptance tests provide the wide randomized sweeps.

use proptest::prelude::*;

use framescope::flow;
use framescope::generate::{random_rotation, random_tight_measure, rng_for};
use framescope::linalg::{dist, dot, mat_vec, norm};
use framescope::measure::SymmetricOperator;
use framescope::potentials;
use framescope::transport;
use framescope::DiscreteMeasure;

fn measure_of(dim: usize, max_count: usize) -> impl Strategy<Value = DiscreteMeasure> {
    (1..=max_count).prop_flat_map(move |n| {
        (
            prop::collection::vec(prop::collection::vec(-2.0..2.0f64, dim), n),
            prop::collection::vec(0.05..1.0f64, n),
        )
            .prop_map(|(points, raw)| {
                let sum: f64 = raw.iter().sum();
                let weights = raw.iter().map(|w| w / sum).collect();
                DiscreteMeasure::new(points, weights).unwrap()
            })
    })
}

fn any_measure() -> impl Strategy<Value = DiscreteMeasure> {
    (1usize..=4).prop_flat_map(|d| measure_of(d, 8))
}

fn rotated(mu: &DiscreteMeasure, q: &[Vec<f64>]) -> DiscreteMeasure {
    let d = mu.dim();
    let flat: Vec<f64> = q.iter().flatten().copied().collect();
    let points = mu.points().iter().map(|x| mat_vec(d, &flat, x)).collect();
    mu.with_points(points).unwrap()
}

fn conjugated(op: &SymmetricOperator, q: &[Vec<f64>]) -> Vec<f64> {
    // Q S Q^T entrywise, with Q given as rows.
    let d = op.dim();
    let mut out = vec![0.0; d * d];
    for r in 0..d {
        let sq: Vec<f64> = (0..d)
            .map(|k| (0..d).map(|l| op.entry(k, l) * q[r][l]).sum::<f64>())
            .collect();
        for c in 0..d {
            out[r * d + c] = dot(&q[c], &sq);
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn trace_equals_the_squared_second_moment(mu in any_measure()) {
        let trace = mu.frame_operator().trace();
        let m2sq = mu.second_moment_sq();
        prop_assert!((trace - m2sq).abs() <= 1e-10 * (1.0 + m2sq));
    }

    #[test]
    fn pfp_dominates_the_dimension_bound(mu in any_measure()) {
        let m2sq = mu.second_moment_sq();
        let bound = m2sq * m2sq / mu.dim() as f64;
        prop_assert!(potentials::pfp(&mu) >= bound - 1e-10 * (1.0 + bound));
    }

    #[test]
    fn tp_matches_the_spectral_form(mu in any_measure()) {
        let tp = potentials::tp_value(&mu);
        let op = mu.frame_operator();
        let lambda = op.eigenvalues();
        let mut spectral = 0.0;
        for i in 0..lambda.len() {
            for j in (i + 1)..lambda.len() {
                spectral += (lambda[i] - lambda[j]).powi(2);
            }
        }
        spectral /= mu.dim() as f64;
        prop_assert!((tp - spectral).abs() <= 1e-8 * (1.0 + tp.abs()));
    }

    #[test]
    fn operator_norm_is_bounded_by_sqrt_tp(mu in any_measure()) {
        let t_norm = potentials::tightness_operator(&mu).operator_norm();
        let tp = potentials::tp_value(&mu).max(0.0);
        prop_assert!(t_norm <= tp.sqrt() + 1e-10);
    }

    #[test]
    fn frame_potential_is_count_squared_times_pfp(mu in (2usize..=4).prop_flat_map(|d| measure_of(d, 6))) {
        let n = mu.len();
        let uniform = DiscreteMeasure::new(mu.points().to_vec(), vec![1.0 / n as f64; n]).unwrap();
        let fp = potentials::fp(mu.points()).unwrap();
        let scaled = (n * n) as f64 * potentials::pfp(&uniform);
        prop_assert!((fp - scaled).abs() <= 1e-10 * (1.0 + fp.abs()));
    }

    #[test]
    fn dilation_scales_the_frame_operator_quadratically(
        mu in any_measure(),
        c in 0.25..1.5f64,
    ) {
        let scaled_points = mu
            .points()
            .iter()
            .map(|x| x.iter().map(|v| c * v).collect())
            .collect();
        let nu = mu.with_points(scaled_points).unwrap();
        let s_mu = mu.frame_operator();
        let s_nu = nu.frame_operator();
        let scale = 1.0 + s_nu.operator_norm();
        for r in 0..mu.dim() {
            for col in 0..mu.dim() {
                let expect = c * c * s_mu.entry(r, col);
                prop_assert!((s_nu.entry(r, col) - expect).abs() <= 1e-10 * scale);
            }
        }
        let tp = potentials::tp_value(&mu);
        let tp_scaled = potentials::tp_value(&nu);
        prop_assert!((tp_scaled - c.powi(4) * tp).abs() <= 1e-10 * (1.0 + tp.abs()));
    }

    #[test]
    fn rotations_conjugate_the_frame_operator(
        mu in (2usize..=4).prop_flat_map(|d| measure_of(d, 8)),
        seed in any::<u64>(),
    ) {
        let d = mu.dim();
        let q = random_rotation(d, &mut rng_for(seed, 11));
        let nu = rotated(&mu, &q);
        let s_nu = nu.frame_operator();
        let expect = conjugated(&mu.frame_operator(), &q);
        let scale = 1.0 + s_nu.operator_norm();
        for r in 0..d {
            for c in 0..d {
                prop_assert!((s_nu.entry(r, c) - expect[r * d + c]).abs() <= 1e-10 * scale);
            }
        }
        for (a, b) in s_nu.eigenvalues().iter().zip(mu.frame_operator().eigenvalues()) {
            prop_assert!((a - b).abs() <= 1e-8 * scale);
        }
    }

    #[test]
    fn potentials_are_rotation_invariant(
        mu in (2usize..=4).prop_flat_map(|d| measure_of(d, 8)),
        seed in any::<u64>(),
    ) {
        let q = random_rotation(mu.dim(), &mut rng_for(seed, 12));
        let nu = rotated(&mu, &q);
        let tp = potentials::tp_value(&mu);
        prop_assert!((potentials::tp_value(&nu) - tp).abs() <= 1e-10 * (1.0 + tp.abs()));
        let p4 = potentials::pframe_potential(&mu, 4).unwrap().value;
        let p4_rot = potentials::pframe_potential(&nu, 4).unwrap().value;
        prop_assert!((p4_rot - p4).abs() <= 1e-10 * (1.0 + p4.abs()));
    }

    #[test]
    fn explicit_steps_conserve_weights_and_count(mu in any_measure()) {
        let next = flow::explicit_step(&mu, 0.005, 0.0).unwrap();
        prop_assert_eq!(next.len(), mu.len());
        prop_assert_eq!(next.weights(), mu.weights());
    }

    #[test]
    fn random_tight_measures_are_near_fixed_points(
        seed in any::<u64>(),
        dim in 2usize..=4,
        groups in 1usize..=3,
    ) {
        let mu = random_tight_measure(dim, groups, &mut rng_for(seed, 13)).unwrap();
        let next = flow::explicit_step(&mu, 0.01, 0.0).unwrap();
        let moved = mu
            .points()
            .iter()
            .zip(next.points())
            .map(|(a, b)| dist(a, b))
            .fold(0.0, f64::max);
        prop_assert!(moved <= 1e-10, "tight measure moved by {moved}");
        prop_assert!(potentials::tp_value(&mu) <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn wasserstein_satisfies_the_metric_axioms(
        (mu, nu, rho) in (2usize..=3).prop_flat_map(|d| {
            (measure_of(d, 6), measure_of(d, 6), measure_of(d, 6))
        }),
        p in prop::sample::select(vec![1.0f64, 2.0]),
    ) {
        let (self_dist, _) = transport::wasserstein_exact(&mu, &mu, p).unwrap();
        prop_assert!(self_dist.abs() <= 1e-9);
        let (ab, _) = transport::wasserstein_exact(&mu, &nu, p).unwrap();
        let (ba, _) = transport::wasserstein_exact(&nu, &mu, p).unwrap();
        prop_assert!((ab - ba).abs() <= 1e-9 * (1.0 + ab));
        let (ac, _) = transport::wasserstein_exact(&mu, &rho, p).unwrap();
        let (bc, _) = transport::wasserstein_exact(&nu, &rho, p).unwrap();
        prop_assert!(ac <= ab + bc + 1e-9 * (1.0 + ac));
    }

    #[test]
    fn wasserstein_is_monotone_in_p(
        (mu, nu) in (2usize..=3).prop_flat_map(|d| (measure_of(d, 6), measure_of(d, 6))),
    ) {
        let (w1, _) = transport::wasserstein_exact(&mu, &nu, 1.0).unwrap();
        let (w2, _) = transport::wasserstein_exact(&mu, &nu, 2.0).unwrap();
        let (w4, _) = transport::wasserstein_exact(&mu, &nu, 4.0).unwrap();
        prop_assert!(w1 <= w2 + 1e-9 * (1.0 + w2));
        prop_assert!(w2 <= w4 + 1e-9 * (1.0 + w4));
    }

    #[test]
    fn any_feasible_plan_costs_at_least_the_optimum(
        (mu, nu) in (2usize..=3).prop_flat_map(|d| (measure_of(d, 6), measure_of(d, 6))),
        p in prop::sample::select(vec![1.0f64, 2.0]),
    ) {
        // The product coupling is always feasible.
        let mut product_cost = 0.0;
        for (x, &w) in mu.points().iter().zip(mu.weights()) {
            for (y, &v) in nu.points().iter().zip(nu.weights()) {
                product_cost += w * v * dist(x, y).powf(p);
            }
        }
        let product_cost = product_cost.powf(1.0 / p);
        let (optimum, _) = transport::wasserstein_exact(&mu, &nu, p).unwrap();
        prop_assert!(product_cost >= optimum - 1e-9 * (1.0 + optimum));
    }

    #[test]
    fn barycenters_are_continuous_in_the_measure(
        (mu, nu, z) in (2usize..=3).prop_flat_map(|d| {
            (
                measure_of(d, 5),
                measure_of(d, 5),
                prop::collection::vec(-1.5..1.5f64, d),
            )
        }),
        p in prop::sample::select(vec![2u32, 4]),
    ) {
        let g_mu = potentials::pframe_barycenter(&mu, p, &z).unwrap();
        let g_nu = potentials::pframe_barycenter(&nu, p, &z).unwrap();
        let lhs = dist(&g_mu, &g_nu);

        let pf = p as f64;
        let (wp, _) = transport::wasserstein_exact(&mu, &nu, pf).unwrap();
        let mp_mu = mu.moment(pf).unwrap();
        let mp_nu = nu.moment(pf).unwrap();
        let mut bracket = mp_mu.powi(p as i32 - 1);
        for i in 1..=(p - 1) {
            bracket += mp_nu.powi((p - i) as i32) * mp_mu.powi(i as i32 - 1);
        }
        let rhs = 2.0 * pf * norm(&z).powi(p as i32 - 1) * wp * bracket;
        prop_assert!(lhs <= rhs + 1e-9 * (1.0 + rhs), "lhs {lhs} rhs {rhs}");
    }
}
