//! Transportation simplex on a dense `rows x cols` cost matrix.
//!
//! The basis is a spanning tree of the bipartite row/column graph with
//! `rows + cols - 1` cells. Node potentials `u_r + v_c = cost(r, c)` on the
//! tree give reduced costs for every other cell; a cell with negative reduced
//! cost enters, the tree cycle it closes is rebalanced, and a blocking cell
//! leaves. Long runs of degenerate pivots switch the pricing to Bland's
//! smallest-index rule, which cannot cycle.

use std::collections::VecDeque;

/// Optimal basic solution with its node potentials.
#[derive(Debug, Clone)]
pub(crate) struct BasicSolution {
    /// Basic cells `(row, col, flow)`; degenerate cells carry zero flow.
    pub flows: Vec<(usize, usize, f64)>,
    pub u: Vec<f64>,
    #[cfg_attr(not(test), allow(dead_code))]
    pub v: Vec<f64>,
    pub cost: f64,
    pub pivots: usize,
}

const DEGENERATE_RUN_BEFORE_BLAND: usize = 50;

pub(crate) fn solve(
    cost: &[f64],
    rows: usize,
    cols: usize,
    supply: &[f64],
    demand: &[f64],
) -> Result<BasicSolution, String> {
    assert!(rows > 0 && cols > 0);
    assert_eq!(cost.len(), rows * cols);
    let nodes = rows + cols;

    let mut basis = northwest_corner(rows, cols, supply, demand);
    let mut in_basis = vec![false; rows * cols];
    for &(r, c, _) in &basis {
        in_basis[r * cols + c] = true;
    }

    let max_cost = cost.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
    let eps = 1e-12 * (1.0 + max_cost);
    let max_pivots = 1000 + 50 * nodes * rows * cols;

    let mut u = vec![0.0; rows];
    let mut v = vec![0.0; cols];
    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); nodes];
    let mut parent_edge = vec![usize::MAX; nodes];
    let mut visited = vec![false; nodes];
    let mut queue = VecDeque::with_capacity(nodes);
    let mut degenerate_run = 0;
    let mut bland = false;
    let mut pivots = 0;

    loop {
        for a in adjacency.iter_mut() {
            a.clear();
        }
        for (e, &(r, c, _)) in basis.iter().enumerate() {
            adjacency[r].push(e);
            adjacency[rows + c].push(e);
        }

        // potentials, rooted at row 0
        visited.iter_mut().for_each(|x| *x = false);
        queue.clear();
        u[0] = 0.0;
        visited[0] = true;
        queue.push_back(0);
        while let Some(node) = queue.pop_front() {
            for &e in &adjacency[node] {
                let (r, c, _) = basis[e];
                let col_node = rows + c;
                if node == r {
                    if !visited[col_node] {
                        v[c] = cost[r * cols + c] - u[r];
                        visited[col_node] = true;
                        queue.push_back(col_node);
                    }
                } else if !visited[r] {
                    u[r] = cost[r * cols + c] - v[c];
                    visited[r] = true;
                    queue.push_back(r);
                }
            }
        }
        if visited.iter().any(|&x| !x) {
            return Err("basis is not a spanning tree".into());
        }

        let mut entering: Option<(usize, usize)> = None;
        let mut best = -eps;
        'scan: for r in 0..rows {
            for c in 0..cols {
                if in_basis[r * cols + c] {
                    continue;
                }
                let reduced = cost[r * cols + c] - u[r] - v[c];
                if reduced < best {
                    entering = Some((r, c));
                    if bland {
                        break 'scan;
                    }
                    best = reduced;
                }
            }
        }
        let Some((er, ec)) = entering else {
            let total = basis.iter().map(|&(r, c, f)| f * cost[r * cols + c]).sum();
            return Ok(BasicSolution { flows: basis, u, v, cost: total, pivots });
        };

        pivots += 1;
        if pivots > max_pivots {
            return Err(format!("no optimum after {max_pivots} pivots"));
        }

        // tree path from the entering row to the entering column
        visited.iter_mut().for_each(|x| *x = false);
        queue.clear();
        visited[er] = true;
        queue.push_back(er);
        let target = rows + ec;
        while let Some(node) = queue.pop_front() {
            if node == target {
                break;
            }
            for &e in &adjacency[node] {
                let (r, c, _) = basis[e];
                let other = if node == r { rows + c } else { r };
                if !visited[other] {
                    visited[other] = true;
                    parent_edge[other] = e;
                    queue.push_back(other);
                }
            }
        }
        // walk back from the column: edges alternate -, +, -, ...
        let mut minus = Vec::new();
        let mut plus = Vec::new();
        let mut node = target;
        let mut sign_minus = true;
        while node != er {
            let e = parent_edge[node];
            if sign_minus {
                minus.push(e);
            } else {
                plus.push(e);
            }
            sign_minus = !sign_minus;
            let (r, c, _) = basis[e];
            node = if node == r { rows + c } else { r };
        }

        let mut leave = minus[0];
        for &e in &minus[1..] {
            let (fe, fl) = (basis[e].2, basis[leave].2);
            let key = |i: usize| basis[i].0 * cols + basis[i].1;
            if fe < fl || (fe == fl && key(e) < key(leave)) {
                leave = e;
            }
        }
        let theta = basis[leave].2;
        if theta <= 0.0 {
            degenerate_run += 1;
            if degenerate_run > DEGENERATE_RUN_BEFORE_BLAND {
                bland = true;
            }
        } else {
            degenerate_run = 0;
        }
        for &e in &minus {
            basis[e].2 = (basis[e].2 - theta).max(0.0);
        }
        for &e in &plus {
            basis[e].2 += theta;
        }
        let (lr, lc, _) = basis[leave];
        in_basis[lr * cols + lc] = false;
        in_basis[er * cols + ec] = true;
        basis[leave] = (er, ec, theta);
    }
}

/// Staircase starting basis; always exactly `rows + cols - 1` cells.
fn northwest_corner(
    rows: usize,
    cols: usize,
    supply: &[f64],
    demand: &[f64],
) -> Vec<(usize, usize, f64)> {
    let mut rs = supply.to_vec();
    let mut cs = demand.to_vec();
    let mut out = Vec::with_capacity(rows + cols - 1);
    let (mut r, mut c) = (0, 0);
    loop {
        let q = rs[r].min(cs[c]).max(0.0);
        out.push((r, c, q));
        rs[r] -= q;
        cs[c] -= q;
        if r == rows - 1 && c == cols - 1 {
            break;
        }
        if c == cols - 1 || (r < rows - 1 && rs[r] <= cs[c]) {
            r += 1;
        } else {
            c += 1;
        }
    }
    out
}
