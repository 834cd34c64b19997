//! Transportation-problem simplex.
//!
//! Solves `min sum_{ij} c_ij f_ij` subject to row sums `a_i`, column sums
//! `b_j`, `f >= 0`, for balanced instances. The basis is a spanning tree on
//! the bipartite supply/demand graph with exactly `n + m - 1` cells
//! (degenerate zero-flow cells allowed). Pivoting uses Bland's rule: the
//! entering cell is the first in row-major order with reduced cost below
//! `-tol`, and the leaving cell is the lexicographically smallest among the
//! minimum-ratio candidates. Both choices are deterministic, so degenerate
//! optima always resolve to the same vertex of the transportation polytope,
//! and cycling cannot occur.

use crate::error::{Error, Result};

/// Returns the optimal flow, row-major `n x m`.
///
/// `supply` and `demand` must be strictly positive and sum to the same total
/// up to rounding; the caller prunes negligible atoms first.
pub(crate) fn solve(
    n: usize,
    m: usize,
    supply: &[f64],
    demand: &[f64],
    cost: &[f64],
) -> Result<Vec<f64>> {
    debug_assert_eq!(supply.len(), n);
    debug_assert_eq!(demand.len(), m);
    debug_assert_eq!(cost.len(), n * m);

    let mut flow = vec![0.0; n * m];
    // Basic cells; the set always has n + m - 1 members forming a spanning
    // tree over the n row nodes and m column nodes.
    let mut basis: Vec<(usize, usize)> = Vec::with_capacity(n + m - 1);
    let mut in_basis = vec![false; n * m];

    // Northwest-corner start: walks from (0,0) to (n-1,m-1) advancing one
    // index per step, which yields exactly n + m - 1 cells.
    {
        let (mut i, mut j) = (0usize, 0usize);
        let mut ra = supply[0];
        let mut rb = demand[0];
        loop {
            let f = ra.min(rb).max(0.0);
            flow[i * m + j] = f;
            basis.push((i, j));
            in_basis[i * m + j] = true;
            ra -= f;
            rb -= f;
            if i == n - 1 && j == m - 1 {
                break;
            }
            if j == m - 1 || (i < n - 1 && ra <= rb) {
                i += 1;
                ra = supply[i];
            } else {
                j += 1;
                rb = demand[j];
            }
        }
    }

    let cost_scale = cost.iter().fold(0.0f64, |acc, c| acc.max(c.abs()));
    let enter_tol = 1e-12 * (1.0 + cost_scale);
    // Generous budget; exceeding it means the pivot rule is broken.
    let max_pivots = 100 * (n * m + 10);

    let nodes = n + m; // rows 0..n, columns n..n+m
    let mut u = vec![0.0; n];
    let mut v = vec![0.0; m];
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); nodes];
    let mut visited = vec![false; nodes];
    let mut stack: Vec<usize> = Vec::with_capacity(nodes);
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; nodes];

    for _pivot in 0..max_pivots {
        // Rebuild tree adjacency (node -> (neighbor, basis index)).
        for a in adj.iter_mut() {
            a.clear();
        }
        for (k, &(i, j)) in basis.iter().enumerate() {
            adj[i].push((n + j, k));
            adj[n + j].push((i, k));
        }

        // Duals from the tree: u[i] + v[j] = c[i,j] on basic cells.
        for f in visited.iter_mut() {
            *f = false;
        }
        u[0] = 0.0;
        visited[0] = true;
        stack.clear();
        stack.push(0);
        while let Some(node) = stack.pop() {
            for &(next, k) in &adj[node] {
                if visited[next] {
                    continue;
                }
                visited[next] = true;
                let (bi, bj) = basis[k];
                if next >= n {
                    v[next - n] = cost[bi * m + bj] - u[bi];
                } else {
                    u[next] = cost[bi * m + bj] - v[bj];
                }
                stack.push(next);
            }
        }
        if visited.iter().any(|f| !f) {
            return Err(Error::SolverFailure(
                "basis does not span the bipartite graph".into(),
            ));
        }

        // Bland's rule: first eligible entering cell in row-major order.
        let mut entering = None;
        'scan: for i in 0..n {
            for j in 0..m {
                if !in_basis[i * m + j] && cost[i * m + j] - u[i] - v[j] < -enter_tol {
                    entering = Some((i, j));
                    break 'scan;
                }
            }
        }
        let (ei, ej) = match entering {
            Some(cell) => cell,
            None => {
                // Optimal. Zero out rounding-level negatives.
                for f in flow.iter_mut() {
                    if *f < 0.0 {
                        *f = 0.0;
                    }
                }
                return Ok(flow);
            }
        };

        // Unique tree path from row node ei to column node n + ej; adding
        // the entering cell closes the pivot cycle.
        for p in parent.iter_mut() {
            *p = None;
        }
        for f in visited.iter_mut() {
            *f = false;
        }
        visited[ei] = true;
        stack.clear();
        stack.push(ei);
        while let Some(node) = stack.pop() {
            if node == n + ej {
                break;
            }
            for &(next, k) in &adj[node] {
                if !visited[next] {
                    visited[next] = true;
                    parent[next] = Some((node, k));
                    stack.push(next);
                }
            }
        }
        if parent[n + ej].is_none() {
            return Err(Error::SolverFailure("pivot cycle not found".into()));
        }

        // Walk back from the column node to the row node. Edges at odd
        // positions from the entering cell (1st, 3rd, ...) lose flow.
        let mut minus_cells: Vec<usize> = Vec::new();
        let mut plus_cells: Vec<usize> = Vec::new();
        let mut node = n + ej;
        let mut sign_minus = true; // first edge on the path (touching ej) is minus
        while let Some((prev, k)) = parent[node] {
            if sign_minus {
                minus_cells.push(k);
            } else {
                plus_cells.push(k);
            }
            sign_minus = !sign_minus;
            node = prev;
        }

        // Leaving cell: minimum flow among minus cells, smallest (i, j) on
        // ties (Bland).
        let mut theta = f64::INFINITY;
        let mut leave: Option<usize> = None;
        for &k in &minus_cells {
            let (i, j) = basis[k];
            let f = flow[i * m + j];
            let take = match leave {
                None => true,
                Some(lk) => f < theta || (f == theta && basis[k] < basis[lk]),
            };
            if take {
                theta = f;
                leave = Some(k);
            }
        }
        let leave = leave.ok_or_else(|| Error::SolverFailure("empty pivot cycle".into()))?;

        for &k in &plus_cells {
            let (i, j) = basis[k];
            flow[i * m + j] += theta;
        }
        for &k in &minus_cells {
            let (i, j) = basis[k];
            flow[i * m + j] = (flow[i * m + j] - theta).max(0.0);
        }
        let (li, lj) = basis[leave];
        flow[li * m + lj] = 0.0;
        in_basis[li * m + lj] = false;
        flow[ei * m + ej] = theta;
        in_basis[ei * m + ej] = true;
        basis[leave] = (ei, ej);
    }

    Err(Error::SolverFailure(format!(
        "pivot budget exhausted on a {n} x {m} instance"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn total_cost(flow: &[f64], cost: &[f64]) -> f64 {
        flow.iter().zip(cost).map(|(f, c)| f * c).sum()
    }

    #[test]
    fn identity_instance() {
        // Matching supplies and demands with zero diagonal cost.
        let a = [0.5, 0.5];
        let cost = [0.0, 1.0, 1.0, 0.0];
        let flow = solve(2, 2, &a, &a, &cost).unwrap();
        assert!(total_cost(&flow, &cost).abs() < 1e-15);
    }

    #[test]
    fn two_by_two_closed_form() {
        // One free parameter f11 in [max(0, a1+b1-1), min(a1, b1)]; the cost
        // is linear in it, so the optimum sits at an endpoint.
        let a = [0.3, 0.7];
        let b = [0.6, 0.4];
        let cost = [1.0, 5.0, 2.0, 1.0];
        let flow = solve(2, 2, &a, &b, &cost).unwrap();
        let lo = (a[0] + b[0] - 1.0f64).max(0.0);
        let hi = a[0].min(b[0]);
        let eval = |f11: f64| {
            cost[0] * f11
                + cost[1] * (a[0] - f11)
                + cost[2] * (b[0] - f11)
                + cost[3] * (a[1] - b[0] + f11)
        };
        let best = eval(lo).min(eval(hi));
        assert!((total_cost(&flow, &cost) - best).abs() < 1e-12);
    }

    #[test]
    fn rectangular_instance_marginals() {
        let a = [0.2, 0.3, 0.5];
        let b = [0.6, 0.4];
        let cost = [3.0, 1.0, 4.0, 1.0, 5.0, 9.0];
        let flow = solve(3, 2, &a, &b, &cost).unwrap();
        for i in 0..3 {
            let row: f64 = (0..2).map(|j| flow[i * 2 + j]).sum();
            assert!((row - a[i]).abs() < 1e-12);
        }
        for j in 0..2 {
            let col: f64 = (0..3).map(|i| flow[i * 2 + j]).sum();
            assert!((col - b[j]).abs() < 1e-12);
        }
        for &f in &flow {
            assert!(f >= 0.0);
        }
    }

    #[test]
    fn degenerate_equal_splits() {
        // Heavily degenerate: every prefix sum ties. Must still terminate
        // and return a feasible optimal plan.
        let a = [0.25, 0.25, 0.25, 0.25];
        let cost: Vec<f64> = (0..16).map(|k| ((k * 7) % 5) as f64).collect();
        let flow = solve(4, 4, &a, &a, &cost).unwrap();
        for i in 0..4 {
            let row: f64 = (0..4).map(|j| flow[i * 4 + j]).sum();
            assert!((row - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn deterministic_on_ties() {
        // Constant cost: every feasible plan is optimal; repeated solves
        // must return the identical vertex.
        let a = [0.5, 0.5];
        let cost = [1.0, 1.0, 1.0, 1.0];
        let f1 = solve(2, 2, &a, &a, &cost).unwrap();
        let f2 = solve(2, 2, &a, &a, &cost).unwrap();
        assert_eq!(f1, f2);
    }
}
