//! Exhaustive vertex enumeration of the transportation polytope.
//!
//! Every vertex is a basic feasible solution supported on a spanning forest
//! of the bipartite support graph, and every forest extends to a spanning
//! tree. Enumerating all spanning trees of `K_{m,n}` among the `m * n`
//! cells, solving each for its (unique) flows and keeping the feasible ones
//! therefore visits every vertex. This shares no code with the simplex
//! solver and serves as its reference in tests.

use crate::error::{Error, Result};
use crate::measure::DiscreteMeasure;
use crate::transport::{check_exponent, ground_cost, check_pair};

/// Largest support the oracle accepts on either side.
pub const MAX_ORACLE_SUPPORT: usize = 4;

/// `W_p(mu, nu)` by enumerating every vertex of the transportation polytope.
pub fn brute_force_wasserstein(mu: &DiscreteMeasure, nu: &DiscreteMeasure, p: f64) -> Result<f64> {
    check_exponent(p)?;
    check_pair(mu, nu)?;
    let a = mu.support();
    let b = nu.support();
    for s in [&a, &b] {
        if s.len() > MAX_ORACLE_SUPPORT {
            return Err(Error::SupportTooLarge(s.len()));
        }
    }
    let space = mu.space();
    let (m, n) = (a.len(), b.len());
    let cost: Vec<f64> = a
        .iter()
        .flat_map(|&(x, _)| b.iter().map(move |&(y, _)| (x, y)))
        .map(|(x, y)| ground_cost(space.distance(x, y), p))
        .collect();
    let supply: Vec<f64> = a.iter().map(|&(_, w)| w).collect();
    let demand: Vec<f64> = b.iter().map(|&(_, w)| w).collect();
    let best = min_vertex_cost(&cost, m, n, &supply, &demand)
        .ok_or_else(|| Error::SolverFailure("no feasible vertex found".into()))?;
    Ok(best.max(0.0).powf(1.0 / p))
}

/// Minimum of `sum flow * cost` over all feasible spanning-tree solutions.
pub(crate) fn min_vertex_cost(
    cost: &[f64],
    m: usize,
    n: usize,
    supply: &[f64],
    demand: &[f64],
) -> Option<f64> {
    let cells = m * n;
    let need = m + n - 1;
    let mut best: Option<f64> = None;
    for mask in 0u32..(1u32 << cells) {
        if mask.count_ones() as usize != need {
            continue;
        }
        let chosen: Vec<(usize, usize)> =
            (0..cells).filter(|k| mask >> k & 1 == 1).map(|k| (k / n, k % n)).collect();
        if !is_spanning_tree(&chosen, m, n) {
            continue;
        }
        let Some(flows) = tree_flows(&chosen, m, n, supply, demand) else {
            continue;
        };
        if flows.iter().any(|&f| f < -1e-12) {
            continue;
        }
        let total: f64 =
            chosen.iter().zip(&flows).map(|(&(r, c), &f)| f.max(0.0) * cost[r * n + c]).sum();
        best = Some(best.map_or(total, |b: f64| b.min(total)));
    }
    best
}

fn is_spanning_tree(cells: &[(usize, usize)], m: usize, n: usize) -> bool {
    let mut parent: Vec<usize> = (0..m + n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for &(r, c) in cells {
        let (a, b) = (find(&mut parent, r), find(&mut parent, m + c));
        if a == b {
            return false;
        }
        parent[a] = b;
    }
    true
}

/// Flows on a spanning tree by repeatedly peeling leaves.
fn tree_flows(
    cells: &[(usize, usize)],
    m: usize,
    n: usize,
    supply: &[f64],
    demand: &[f64],
) -> Option<Vec<f64>> {
    let mut residual: Vec<f64> = supply.iter().chain(demand).copied().collect();
    let mut degree = vec![0usize; m + n];
    for &(r, c) in cells {
        degree[r] += 1;
        degree[m + c] += 1;
    }
    let mut flows = vec![f64::NAN; cells.len()];
    let mut open = cells.len();
    while open > 0 {
        let (e, leaf) = cells.iter().enumerate().find_map(|(e, &(r, c))| {
            if !flows[e].is_nan() {
                return None;
            }
            if degree[r] == 1 {
                Some((e, r))
            } else if degree[m + c] == 1 {
                Some((e, m + c))
            } else {
                None
            }
        })?;
        let (r, c) = cells[e];
        let f = residual[leaf];
        flows[e] = f;
        residual[r] -= f;
        residual[m + c] -= f;
        degree[r] -= 1;
        degree[m + c] -= 1;
        open -= 1;
    }
    Some(flows)
}
