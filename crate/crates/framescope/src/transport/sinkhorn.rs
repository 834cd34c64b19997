//! Log-domain Sinkhorn iteration for entropically regularized transport.
//!
//! Works with dual potentials `f`, `g` and evaluates all updates through
//! log-sum-exp, so small regularization weights never underflow the kernel.
//! Convergence is declared on the L1 violation of the row marginals, checked
//! after each `g` update (the column marginals are then exact by
//! construction).

use crate::error::{Error, Result};
use crate::linalg::CompensatedSum;

#[derive(Debug)]
pub(crate) struct SinkhornOutcome {
    pub coupling: Vec<f64>,
}

/// log sum_k exp(vals_k), stabilized by the running maximum.
fn log_sum_exp(vals: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = vals.clone().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let mut acc = CompensatedSum::new();
    for v in vals {
        acc.add((v - max).exp());
    }
    max + acc.value().ln()
}

/// Runs log-domain Sinkhorn on a balanced instance. `cost` is row-major
/// `n x m`; `reg` is the entropic weight, strictly positive.
#[allow(clippy::too_many_arguments)]
pub(crate) fn solve(
    n: usize,
    m: usize,
    supply: &[f64],
    demand: &[f64],
    cost: &[f64],
    reg: f64,
    max_iter: usize,
    tol: f64,
) -> Result<SinkhornOutcome> {
    debug_assert!(reg > 0.0);
    let log_a: Vec<f64> = supply.iter().map(|&w| w.ln()).collect();
    let log_b: Vec<f64> = demand.iter().map(|&w| w.ln()).collect();

    // Potentials in the scaling convention: the coupling is
    // exp(f_i + g_j - c_ij / reg) with log_a, log_b folded into f, g.
    let mut f = log_a.clone();
    let mut g = vec![0.0; m];

    let mut violation = f64::INFINITY;
    let mut iterations = 0;
    for it in 1..=max_iter {
        // g update: column marginals become exact.
        for j in 0..m {
            let lse = log_sum_exp((0..n).map(|i| f[i] - cost[i * m + j] / reg));
            g[j] = log_b[j] - lse;
        }
        // f update: row marginals become exact.
        for i in 0..n {
            let lse = log_sum_exp((0..m).map(|j| g[j] - cost[i * m + j] / reg));
            f[i] = log_a[i] - lse;
        }
        iterations = it;

        if it % 10 == 0 || it == max_iter {
            // After the f update the rows are exact; measure how far the
            // column marginals have drifted.
            let mut col = vec![CompensatedSum::new(); m];
            for i in 0..n {
                for (j, acc) in col.iter_mut().enumerate() {
                    acc.add((f[i] + g[j] - cost[i * m + j] / reg).exp());
                }
            }
            let mut l1 = CompensatedSum::new();
            for (j, acc) in col.iter().enumerate() {
                l1.add((acc.value() - demand[j]).abs());
            }
            violation = l1.value();
            if violation <= tol {
                break;
            }
        }
    }

    if violation > tol {
        return Err(Error::NonConvergence {
            iterations,
            violation,
        });
    }

    let mut coupling = vec![0.0; n * m];
    for i in 0..n {
        for j in 0..m {
            coupling[i * m + j] = (f[i] + g[j] - cost[i * m + j] / reg).exp();
        }
    }
    round_to_marginals(n, m, &mut coupling, supply, demand);
    Ok(SinkhornOutcome { coupling })
}

/// Rounds a near-feasible coupling onto the transportation polytope: rows
/// and columns are scaled down so neither marginal is exceeded, then the
/// missing mass is restored as a rank-one patch. Marginals become exact up
/// to rounding and the cost moves by at most 2 * violation * max(cost).
/// Without this step the iteration would have to run until the marginal
/// drift itself reached the target accuracy, which for small `reg` decays
/// only like 1/iterations.
fn round_to_marginals(n: usize, m: usize, coupling: &mut [f64], supply: &[f64], demand: &[f64]) {
    for i in 0..n {
        let row = &mut coupling[i * m..(i + 1) * m];
        let r = crate::linalg::csum(row.iter().copied());
        if r > supply[i] && r > 0.0 {
            let scale = supply[i] / r;
            for g in row.iter_mut() {
                *g *= scale;
            }
        }
    }
    let mut col_sums = vec![0.0; m];
    for j in 0..m {
        let mut acc = CompensatedSum::new();
        for i in 0..n {
            acc.add(coupling[i * m + j]);
        }
        col_sums[j] = acc.value();
        if col_sums[j] > demand[j] && col_sums[j] > 0.0 {
            let scale = demand[j] / col_sums[j];
            for i in 0..n {
                coupling[i * m + j] *= scale;
            }
            col_sums[j] = demand[j];
        }
    }
    let mut row_res = vec![0.0; n];
    let mut total = CompensatedSum::new();
    for i in 0..n {
        let r = crate::linalg::csum(coupling[i * m..(i + 1) * m].iter().copied());
        row_res[i] = (supply[i] - r).max(0.0);
        total.add(row_res[i]);
    }
    let total = total.value();
    if total <= 0.0 {
        return;
    }
    let col_res: Vec<f64> = (0..m).map(|j| (demand[j] - col_sums[j]).max(0.0)).collect();
    for i in 0..n {
        if row_res[i] == 0.0 {
            continue;
        }
        for j in 0..m {
            coupling[i * m + j] += row_res[i] * col_res[j] / total;
        }
    }
}
