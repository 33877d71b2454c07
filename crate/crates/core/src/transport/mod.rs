//! Exact `L^p` optimal transport between discrete measures.
//!
//! Problems are solved on the supports only: a measure with `k` atoms
//! contributes `k` nodes to the bipartite transportation network no matter
//! how large the ambient space is. The simplex node potentials double as a
//! Kantorovich dual certificate, extended to the whole space by c-transforms.

mod oracle;
mod simplex;

pub use oracle::{brute_force_wasserstein, MAX_ORACLE_SUPPORT};

use crate::error::{Error, Result};
use crate::measure::{same_space, support_of, DiscreteMeasure, SpaceRef};
use crate::space::FiniteMetricSpace;

/// Slack allowed in `phi(x) + psi(y) <= d(x, y)^p`.
pub const DUAL_FEASIBILITY_TOL: f64 = 1e-9;

/// `d^p`, exact for `p = 1`.
#[inline]
pub fn ground_cost(d: f64, p: f64) -> f64 {
    if p == 1.0 {
        d
    } else if p == 2.0 {
        d * d
    } else {
        d.powf(p)
    }
}

/// Accepts `1 <= p < inf`.
pub fn check_exponent(p: f64) -> Result<()> {
    if p.is_finite() && p >= 1.0 {
        Ok(())
    } else {
        Err(Error::UnsupportedExponent(p))
    }
}

pub(crate) fn check_pair(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<()> {
    if same_space(mu.space(), nu.space()) {
        Ok(())
    } else {
        Err(Error::SpaceMismatch)
    }
}

/// A transport plan between two measures, stored sparsely.
#[derive(Debug, Clone)]
pub struct Coupling {
    space: SpaceRef,
    entries: Vec<(usize, usize, f64)>,
}

impl Coupling {
    pub fn space(&self) -> &SpaceRef {
        &self.space
    }

    /// Cells `(x, y, mass)` with positive mass.
    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn mass(&self, x: usize, y: usize) -> f64 {
        self.entries.iter().filter(|e| e.0 == x && e.1 == y).map(|e| e.2).sum()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.space.len();
        let mut out = vec![vec![0.0; n]; n];
        for &(x, y, w) in &self.entries {
            out[x][y] += w;
        }
        out
    }

    /// Largest deviation of a row or column sum from the given marginals.
    pub fn marginal_error(&self, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> f64 {
        let n = self.space.len();
        let mut rows = vec![0.0; n];
        let mut cols = vec![0.0; n];
        for &(x, y, w) in &self.entries {
            rows[x] += w;
            cols[y] += w;
        }
        let r = rows.iter().zip(mu.weights()).map(|(a, b)| (a - b).abs());
        let c = cols.iter().zip(nu.weights()).map(|(a, b)| (a - b).abs());
        r.chain(c).fold(0.0, f64::max)
    }

    /// `sum pi(x, y) d(x, y)^p`.
    pub fn cost(&self, p: f64) -> f64 {
        self.entries.iter().map(|&(x, y, w)| w * ground_cost(self.space.distance(x, y), p)).sum()
    }
}

/// A Kantorovich pair `(phi, psi)` over every point of the space.
#[derive(Debug, Clone)]
pub struct DualPotentials {
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
    pub p: f64,
}

impl DualPotentials {
    /// `sum phi dmu + sum psi dnu`.
    pub fn value(&self, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> f64 {
        let a: f64 = mu.weights().iter().zip(&self.phi).map(|(w, f)| w * f).sum();
        let b: f64 = nu.weights().iter().zip(&self.psi).map(|(w, f)| w * f).sum();
        a + b
    }

    /// `max (phi(x) + psi(y) - d(x, y)^p)` over all pairs; nonpositive when feasible.
    pub fn max_violation(&self, space: &FiniteMetricSpace) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for (x, &f) in self.phi.iter().enumerate() {
            for (y, &g) in self.psi.iter().enumerate() {
                worst = worst.max(f + g - ground_cost(space.distance(x, y), self.p));
            }
        }
        worst
    }

    /// For `p = 1`: the pair `(phi, -phi)` with `phi` 1-Lipschitz.
    ///
    /// The stored `phi` is already a c-transform over the whole space, so it
    /// is 1-Lipschitz and `-phi >= psi` pointwise; the dual value can only
    /// grow, and by weak duality it stays optimal.
    pub fn unit_lipschitz(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        if self.p != 1.0 {
            return Err(Error::UnsupportedExponent(self.p));
        }
        Ok((self.phi.clone(), self.phi.iter().map(|f| -f).collect()))
    }
}

/// Lipschitz constant of `f` with respect to the space's metric.
pub fn lipschitz_constant(space: &FiniteMetricSpace, f: &[f64]) -> f64 {
    let mut lip: f64 = 0.0;
    for x in 0..space.len() {
        for y in (x + 1)..space.len() {
            lip = lip.max((f[x] - f[y]).abs() / space.distance(x, y));
        }
    }
    lip
}

pub(crate) struct Solved {
    pub cost: f64,
    pub plan: Vec<(usize, usize, f64)>,
    pub phi_support: Vec<f64>,
}

/// Core solve between atom lists on `space`.
pub(crate) fn solve_atoms(
    space: &FiniteMetricSpace,
    a: &[(usize, f64)],
    b: &[(usize, f64)],
    p: f64,
) -> Result<Solved> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidMeasure("empty support".into()));
    }
    if a == b {
        let plan = a.iter().map(|&(x, w)| (x, x, w)).collect();
        // the identity plan is optimal with zero potentials
        return Ok(Solved {
            cost: 0.0,
            plan,
            phi_support: vec![0.0; a.len()],
        });
    }
    let (m, n) = (a.len(), b.len());
    let mut cost = Vec::with_capacity(m * n);
    for &(x, _) in a {
        let row = space.row(x);
        cost.extend(b.iter().map(|&(y, _)| ground_cost(row[y], p)));
    }
    let supply: Vec<f64> = a.iter().map(|t| t.1).collect();
    let demand: Vec<f64> = b.iter().map(|t| t.1).collect();
    let sol = simplex::solve(&cost, m, n, &supply, &demand).map_err(Error::SolverFailure)?;
    log::trace!("{m}x{n} transport solved in {} pivots", sol.pivots);
    let plan = sol
        .flows
        .iter()
        .filter(|f| f.2 > 0.0)
        .map(|&(r, c, f)| (a[r].0, b[c].0, f))
        .collect();
    Ok(Solved { cost: sol.cost.max(0.0), plan, phi_support: sol.u })
}

/// `W_p^p` between atom lists; used by modules that work on sparse rows.
pub(crate) fn transport_cost(
    space: &FiniteMetricSpace,
    a: &[(usize, f64)],
    b: &[(usize, f64)],
    p: f64,
) -> Result<f64> {
    if a.len() == 1 || b.len() == 1 {
        // a coupling with a Dirac marginal is forced
        let (x, w) = if a.len() == 1 { (a[0].0, b) } else { (b[0].0, a) };
        let row = space.row(x);
        return Ok(w.iter().map(|&(y, m)| m * ground_cost(row[y], p)).sum());
    }
    Ok(solve_atoms(space, a, b, p)?.cost)
}

pub(crate) fn wasserstein_atoms(
    space: &FiniteMetricSpace,
    a: &[(usize, f64)],
    b: &[(usize, f64)],
    p: f64,
) -> Result<f64> {
    let c = transport_cost(space, a, b, p)?;
    Ok(if p == 1.0 { c } else { c.powf(1.0 / p) })
}

/// Optimal plan for cost `d^p` and its cost `W_p(mu, nu)^p`.
pub fn optimal_coupling(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    p: f64,
) -> Result<(Coupling, f64)> {
    check_exponent(p)?;
    check_pair(mu, nu)?;
    let solved = solve_atoms(mu.space(), &mu.support(), &nu.support(), p)?;
    Ok((Coupling { space: mu.space().clone(), entries: solved.plan }, solved.cost))
}

/// `W_p(mu, nu)`.
pub fn wasserstein(mu: &DiscreteMeasure, nu: &DiscreteMeasure, p: f64) -> Result<f64> {
    check_exponent(p)?;
    check_pair(mu, nu)?;
    wasserstein_atoms(mu.space(), &mu.support(), &nu.support(), p)
}

/// `W_p(nu + d, nu)` for a signed perturbation `d` of total mass zero,
/// computed from `d` directly so that cancellation against `nu` does not
/// limit precision. Near a fixed point this resolves distances far below
/// `(machine epsilon)^(1/p)`.
///
/// With every `nu(x)` at least the moved mass `|d|_1 / 2`, the optimal plan
/// keeps `nu` in place and routes `d` along cheapest paths for the cost
/// `d^p`, so the value is a transport between `d+` and `d-` in that path
/// metric. Returns `None` when `nu` is too thin for this; callers fall back
/// to [`wasserstein`].
pub fn wasserstein_perturbation(nu: &DiscreteMeasure, d: &[f64], p: f64) -> Result<Option<f64>> {
    check_exponent(p)?;
    let space = nu.space();
    let n = space.len();
    if d.len() != n {
        return Err(Error::SpaceMismatch);
    }
    let plus: f64 = d.iter().filter(|v| **v > 0.0).sum();
    let minus: f64 = -d.iter().filter(|v| **v < 0.0).sum::<f64>();
    let moved = 0.5 * (plus + minus);
    if moved == 0.0 {
        return Ok(Some(0.0));
    }
    if (plus - minus).abs() > 1e-9 * moved || nu.weights().iter().any(|&w| w < moved) {
        return Ok(None);
    }
    let mut path: Vec<f64> = (0..n * n).map(|k| ground_cost(space.distance(k / n, k % n), p)).collect();
    if p > 1.0 {
        for k in 0..n {
            for i in 0..n {
                let ik = path[i * n + k];
                for j in 0..n {
                    let via = ik + path[k * n + j];
                    if via < path[i * n + j] {
                        path[i * n + j] = via;
                    }
                }
            }
        }
    }
    let src: Vec<usize> = (0..n).filter(|&x| d[x] > 0.0).collect();
    let dst: Vec<usize> = (0..n).filter(|&x| d[x] < 0.0).collect();
    let supply: Vec<f64> = src.iter().map(|&x| d[x] / plus).collect();
    let demand: Vec<f64> = dst.iter().map(|&y| -d[y] / minus).collect();
    let cost: Vec<f64> = src.iter().flat_map(|&x| dst.iter().map(move |&y| (x, y))).map(|(x, y)| path[x * n + y]).collect();
    let sol = simplex::solve(&cost, src.len(), dst.len(), &supply, &demand).map_err(Error::SolverFailure)?;
    let c = sol.cost.max(0.0) * moved;
    Ok(Some(if p == 1.0 { c } else { c.powf(1.0 / p) }))
}

/// Optimal Kantorovich potentials, feasible on every pair of points.
pub fn dual_potentials(mu: &DiscreteMeasure, nu: &DiscreteMeasure, p: f64) -> Result<DualPotentials> {
    check_exponent(p)?;
    check_pair(mu, nu)?;
    let space = mu.space();
    let a = mu.support();
    let b = nu.support();
    let solved = solve_atoms(space, &a, &b, p)?;
    let n = space.len();
    // psi = c-transform of the LP row potentials, then phi = c-transform of psi
    let psi: Vec<f64> = (0..n)
        .map(|y| {
            a.iter()
                .zip(&solved.phi_support)
                .map(|(&(x, _), &u)| ground_cost(space.distance(x, y), p) - u)
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let phi: Vec<f64> = (0..n)
        .map(|x| {
            let row = space.row(x);
            (0..n).map(|y| ground_cost(row[y], p) - psi[y]).fold(f64::INFINITY, f64::min)
        })
        .collect();
    Ok(DualPotentials { phi, psi, p })
}

/// Shorthand for dense weight vectors.
pub(crate) fn atoms(weights: &[f64]) -> Vec<(usize, f64)> {
    support_of(weights)
}
