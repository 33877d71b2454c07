//! The random walk lifted to a finite piece of the Wasserstein space.
//!
//! A walk `x -> m_x` on `X` induces a walk on probability measures,
//! `mu -> law of m_x with x ~ mu`, whose atoms are the kernel rows. This
//! module discretizes `(P_p(X), W_p)` as a [`FiniteMetricSpace`] containing
//! the rational simplex grid with denominator `N`, every Dirac and every
//! kernel row, then builds the lifted walk on it and compares curvature
//! infima on both levels.
//!
//! Both sides of the infimum comparison are exact at grid level:
//!
//! * pushing any base coupling of `(mu, nu)` through `x -> m_x` gives a
//!   coupling of the lifted rows, so `W_p(m~_mu, m~_nu) <= (1 - kappa_inf) W_p(mu, nu)`
//!   for every pair of grid points;
//! * the Dirac pairs sit in the grid and reproduce the base curvature.
//!
//! so grid coarseness never weakens the comparison.

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::curvature::{report_from_rows, CurvatureReport};
use crate::error::{Error, Result};
use crate::measure::{convolve, same_space, DiscreteMeasure, RandomWalkKernel, SpaceRef};
use crate::space::FiniteMetricSpace;
use crate::transport::{check_exponent, wasserstein_atoms};

/// Point count above which building logs a warning.
pub const GRID_WARN_POINTS: usize = 5000;
/// Point count above which building is refused.
pub const GRID_MAX_POINTS: usize = 20000;
/// Sup-norm distance under which two measures are the same lifted point.
pub const DEDUP_TOL: f64 = 1e-12;
/// Triangle-inequality slack for the computed `W_p` matrix.
pub const LIFTED_TRIANGLE_TOL: f64 = 2e-8;
/// Allowed error of `W_p(delta_x, delta_y) = d(x, y)`.
pub const DIRAC_ISOMETRY_TOL: f64 = 1e-9;
/// Above this many points the cubic triangle check is skipped.
pub const FULL_VALIDATION_LIMIT: usize = 2000;
/// Residual allowed in lifted invariance.
pub const INVARIANCE_TOL: f64 = 1e-8;
/// Residual allowed in detailed balance.
pub const BALANCE_TOL: f64 = 1e-10;

/// Number of points of the simplex grid `{w : N w in Z^n, sum w = 1}`.
pub fn grid_point_count(n: usize, denominator: usize) -> u128 {
    if n == 0 {
        return 0;
    }
    // C(N + n - 1, n - 1), saturating
    let (top, k) = ((denominator + n - 1) as u128, (n - 1) as u128);
    let k = k.min(top - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul(top - i) / (i + 1);
        if acc > u64::MAX as u128 {
            return u128::MAX;
        }
    }
    acc
}

/// All weight vectors with entries in `{0, 1/N, ..., 1}` summing to one,
/// in lexicographically decreasing order of the first coordinate.
pub fn simplex_grid(n: usize, denominator: usize) -> Vec<Vec<f64>> {
    fn rec(pos: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if pos + 1 == cur.len() {
            cur[pos] = left;
            out.push(cur.clone());
            return;
        }
        for k in (0..=left).rev() {
            cur[pos] = k;
            rec(pos + 1, left - k, cur, out);
        }
    }
    if n == 0 {
        return Vec::new();
    }
    let mut out = Vec::new();
    rec(0, denominator, &mut vec![0; n], &mut out);
    let d = denominator as f64;
    out.into_iter().map(|c| c.into_iter().map(|k| k as f64 / d).collect()).collect()
}

/// A finite sample of `(P_p(X), W_p)` with its embeddings of `X`.
#[derive(Debug, Clone)]
pub struct LiftedSpace {
    kernel: RandomWalkKernel,
    p: f64,
    grid_denominator: usize,
    points: Vec<DiscreteMeasure>,
    space: SpaceRef,
    dirac_index: Vec<usize>,
    walkpoint_index: Vec<usize>,
    extra_index: Vec<usize>,
}

impl LiftedSpace {
    pub fn base(&self) -> &SpaceRef {
        self.kernel.space()
    }

    pub fn kernel(&self) -> &RandomWalkKernel {
        &self.kernel
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn grid_denominator(&self) -> usize {
        self.grid_denominator
    }

    /// The lifted points as measures on the base.
    pub fn points(&self) -> &[DiscreteMeasure] {
        &self.points
    }

    /// The lifted points as a metric space under `W_p`.
    pub fn space(&self) -> &SpaceRef {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `x -> index of delta_x`.
    pub fn dirac_index(&self) -> &[usize] {
        &self.dirac_index
    }

    /// `x -> index of m_x`.
    pub fn walkpoint_index(&self) -> &[usize] {
        &self.walkpoint_index
    }

    /// Indices of user-supplied extra measures, in the order given.
    pub fn extra_index(&self) -> &[usize] {
        &self.extra_index
    }

    /// Index of a measure already in the point set, if any.
    pub fn find(&self, mu: &DiscreteMeasure) -> Option<usize> {
        self.points.iter().position(|q| q.sup_distance(mu) <= DEDUP_TOL)
    }

    /// `m_* nu = sum_x nu(x) delta_{m_x}` as a measure on the lifted space.
    pub fn pushforward_along_walk(&self, nu: &DiscreteMeasure) -> Result<DiscreteMeasure> {
        if !same_space(nu.space(), self.base()) {
            return Err(Error::SpaceMismatch);
        }
        let mut w = vec![0.0; self.len()];
        for (x, &mass) in nu.weights().iter().enumerate() {
            w[self.walkpoint_index[x]] += mass;
        }
        Ok(DiscreteMeasure::from_raw(self.space.clone(), w))
    }
}

/// Builds the lifted space from the simplex grid, Diracs and kernel rows.
pub fn build_lifted_space(
    kernel: &RandomWalkKernel,
    p: f64,
    grid_denominator: usize,
) -> Result<LiftedSpace> {
    build_lifted_space_with(kernel, p, grid_denominator, &[])
}

/// [`build_lifted_space`] with additional measures included as points.
pub fn build_lifted_space_with(
    kernel: &RandomWalkKernel,
    p: f64,
    grid_denominator: usize,
    extras: &[DiscreteMeasure],
) -> Result<LiftedSpace> {
    check_exponent(p)?;
    if grid_denominator == 0 {
        return Err(Error::InvalidGrid);
    }
    let base = kernel.space().clone();
    if extras.iter().any(|m| !same_space(m.space(), &base)) {
        return Err(Error::SpaceMismatch);
    }
    let n = base.len();
    let grid_count = grid_point_count(n, grid_denominator);
    let upper = grid_count.saturating_add((n + extras.len()) as u128);
    if upper > GRID_MAX_POINTS as u128 {
        return Err(Error::GridTooLarge(upper.min(usize::MAX as u128) as usize));
    }
    if upper > GRID_WARN_POINTS as u128 {
        log::warn!("lifted space will have up to {upper} points; the metric fill is quadratic");
    }

    let mut points: Vec<DiscreteMeasure> = simplex_grid(n, grid_denominator)
        .into_iter()
        .map(|w| DiscreteMeasure::from_raw(base.clone(), w))
        .collect();
    let grid_len = points.len();
    let insert = |mu: DiscreteMeasure, points: &mut Vec<DiscreteMeasure>| -> usize {
        match points.iter().position(|q| q.sup_distance(&mu) <= DEDUP_TOL) {
            Some(i) => i,
            None => {
                points.push(mu);
                points.len() - 1
            }
        }
    };
    let dirac_index: Vec<usize> = (0..n)
        .map(|x| {
            points[..grid_len]
                .iter()
                .position(|q| q.weight(x) == 1.0)
                .expect("the grid contains every Dirac")
        })
        .collect();
    let walkpoint_index: Vec<usize> = (0..n).map(|x| insert(kernel.row(x), &mut points)).collect();
    let extra_index: Vec<usize> = extras.iter().map(|m| insert(m.clone(), &mut points)).collect();

    let lifted = lifted_metric(&base, &points, p)?;
    let m = points.len();
    for x in 0..n {
        for y in 0..n {
            let got = lifted[dirac_index[x] * m + dirac_index[y]];
            if (got - base.distance(x, y)).abs() > DIRAC_ISOMETRY_TOL {
                return Err(Error::InternalInvariantViolation(format!(
                    "W_p(delta_{x}, delta_{y}) = {got} but d = {}",
                    base.distance(x, y)
                )));
            }
        }
    }
    let labels: Vec<String> = points.iter().map(|q| weight_label(q.weights())).collect();
    let space = if m <= FULL_VALIDATION_LIMIT {
        let matrix = (0..m).map(|i| lifted[i * m..(i + 1) * m].to_vec()).collect();
        FiniteMetricSpace::with_tolerance(labels, matrix, LIFTED_TRIANGLE_TOL)?
    } else {
        log::warn!("skipping the cubic triangle check on {m} lifted points");
        FiniteMetricSpace::from_trusted(labels, lifted)
    };
    Ok(LiftedSpace {
        kernel: kernel.clone(),
        p,
        grid_denominator,
        points,
        space: Arc::new(space),
        dirac_index,
        walkpoint_index,
        extra_index,
    })
}

fn lifted_metric(base: &FiniteMetricSpace, points: &[DiscreteMeasure], p: f64) -> Result<Vec<f64>> {
    let m = points.len();
    let supports: Vec<Vec<(usize, f64)>> = points.iter().map(|q| q.support()).collect();
    let rows: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|i| {
            ((i + 1)..m)
                .map(|j| wasserstein_atoms(base, &supports[i], &supports[j], p))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let mut out = vec![0.0; m * m];
    for (i, row) in rows.iter().enumerate() {
        for (k, &w) in row.iter().enumerate() {
            let j = i + 1 + k;
            out[i * m + j] = w;
            out[j * m + i] = w;
        }
    }
    Ok(out)
}

fn weight_label(w: &[f64]) -> String {
    let parts: Vec<String> = w.iter().map(|x| format!("{x}")).collect();
    format!("[{}]", parts.join(","))
}

/// The lifted walk `mu -> m~_mu = sum_x mu(x) delta_{m_x}` on a lifted space.
#[derive(Debug, Clone)]
pub struct LiftedKernel {
    space: SpaceRef,
    rows: Vec<Vec<(usize, f64)>>,
}

impl LiftedKernel {
    pub fn space(&self) -> &SpaceRef {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Atoms of `m~` at lifted point `i`, sorted by lifted index.
    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn row_measure(&self, i: usize) -> DiscreteMeasure {
        let mut w = vec![0.0; self.space.len()];
        for &(j, m) in &self.rows[i] {
            w[j] = m;
        }
        DiscreteMeasure::from_raw(self.space.clone(), w)
    }

    /// `m~_sigma(tau)`.
    pub fn entry(&self, sigma: usize, tau: usize) -> f64 {
        self.rows[sigma]
            .binary_search_by_key(&tau, |&(j, _)| j)
            .map(|k| self.rows[sigma][k].1)
            .unwrap_or(0.0)
    }

    /// Dense kernel on the lifted space, e.g. to lift a second time.
    pub fn to_kernel(&self) -> RandomWalkKernel {
        let m = self.space.len();
        let mut entries = vec![0.0; m * m];
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, w) in row {
                entries[i * m + j] = w;
            }
        }
        RandomWalkKernel::from_entries(self.space.clone(), entries)
    }

    /// `sum_sigma lambda(sigma) m~_sigma` for a measure on the lifted space.
    pub fn convolve(&self, lambda: &DiscreteMeasure) -> Result<DiscreteMeasure> {
        if !same_space(lambda.space(), &self.space) {
            return Err(Error::SpaceMismatch);
        }
        let mut out = vec![0.0; self.space.len()];
        for (i, &w) in lambda.weights().iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for &(j, m) in &self.rows[i] {
                out[j] += w * m;
            }
        }
        Ok(DiscreteMeasure::from_raw(self.space.clone(), out))
    }
}

/// Pushes every lifted point forward along `x -> m_x`.
pub fn lift_kernel(lifted: &LiftedSpace) -> LiftedKernel {
    let rows = lifted
        .points
        .iter()
        .map(|mu| {
            let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
            for (x, &w) in mu.weights().iter().enumerate() {
                if w > 0.0 {
                    *acc.entry(lifted.walkpoint_index[x]).or_insert(0.0) += w;
                }
            }
            acc.into_iter().collect()
        })
        .collect();
    LiftedKernel { space: lifted.space.clone(), rows }
}

/// Curvature of the lifted walk over every pair of lifted points.
///
/// The outer transport uses the stored lifted metric raised to `p` as its
/// ground cost; inner problems are never re-solved.
pub fn lifted_curvature_report(
    lifted: &LiftedSpace,
    kernel: &LiftedKernel,
    p: f64,
) -> Result<CurvatureReport> {
    if p != lifted.p {
        return Err(Error::BadConfig(format!(
            "lifted space was built for p = {}, report requested at p = {p}",
            lifted.p
        )));
    }
    if !same_space(&kernel.space, &lifted.space) {
        return Err(Error::SpaceMismatch);
    }
    report_from_rows(&lifted.space, &kernel.rows, p)
}

/// Outcome of comparing base and lifted curvature infima.
#[derive(Debug, Clone, Serialize)]
pub struct LiftVerification {
    pub holds: bool,
    pub p: f64,
    pub tol: f64,
    pub base_inf: f64,
    pub lifted_inf: f64,
    /// `lifted_inf >= base_inf - tol`.
    pub lower_bound_holds: bool,
    /// `lifted_inf <= base_inf + tol`.
    pub attained: bool,
    pub base_witness: (usize, usize),
    pub lifted_witness: (usize, usize),
}

pub fn verify_lift_theorem(
    base: &CurvatureReport,
    lifted: &CurvatureReport,
    tol: f64,
) -> Result<LiftVerification> {
    if base.p != lifted.p {
        return Err(Error::BadConfig(format!(
            "reports use different exponents: {} and {}",
            base.p, lifted.p
        )));
    }
    let lower_bound_holds = lifted.kappa_inf >= base.kappa_inf - tol;
    let attained = lifted.kappa_inf <= base.kappa_inf + tol;
    Ok(LiftVerification {
        holds: lower_bound_holds && attained,
        p: base.p,
        tol,
        base_inf: base.kappa_inf,
        lifted_inf: lifted.kappa_inf,
        lower_bound_holds,
        attained,
        base_witness: base.argmin_pair,
        lifted_witness: lifted.argmin_pair,
    })
}

/// Invariance of `nu~ = m_* nu` under the lifted walk.
#[derive(Debug, Clone, Serialize)]
pub struct LiftedInvariance {
    /// `sup |nu - nu*m|` on the base.
    pub base_residual: f64,
    /// `sup |nu~ * m~ - nu~|` on the lifted space.
    pub lifted_residual: f64,
    pub holds: bool,
    /// Atoms of `nu~` as `(lifted index, mass)`.
    pub lifted_measure: Vec<(usize, f64)>,
}

/// Checks that `nu~` is invariant for the lifted walk, given an invariant `nu`.
pub fn lifted_invariant_check(
    lifted: &LiftedSpace,
    kernel: &LiftedKernel,
    nu: &DiscreteMeasure,
) -> Result<LiftedInvariance> {
    let stepped = convolve(nu, lifted.kernel())?;
    let base_residual = nu.sup_distance(&stepped);
    if base_residual > INVARIANCE_TOL {
        return Err(Error::NotInvariantInput(base_residual));
    }
    let lifted_nu = lifted.pushforward_along_walk(nu)?;
    let next = kernel.convolve(&lifted_nu)?;
    let lifted_residual = lifted_nu.sup_distance(&next);
    Ok(LiftedInvariance {
        base_residual,
        lifted_residual,
        holds: lifted_residual <= INVARIANCE_TOL,
        lifted_measure: lifted_nu.support(),
    })
}

/// Detailed-balance check result.
#[derive(Debug, Clone, Serialize)]
pub struct Reversibility {
    pub reversible: bool,
    /// `max |nu(x) m_x(y) - nu(y) m_y(x)|`.
    pub max_defect: f64,
    pub witness: Option<(usize, usize)>,
}

fn balance<F: Fn(usize, usize) -> f64>(
    pairs: impl Iterator<Item = (usize, usize)>,
    weight: impl Fn(usize) -> f64,
    entry: F,
) -> Reversibility {
    let mut max_defect: f64 = 0.0;
    let mut witness = None;
    for (x, y) in pairs {
        let defect = (weight(x) * entry(x, y) - weight(y) * entry(y, x)).abs();
        if defect > max_defect {
            max_defect = defect;
            if defect > BALANCE_TOL {
                witness = witness.or(Some((x, y)));
            }
        }
    }
    Reversibility { reversible: max_defect <= BALANCE_TOL, max_defect, witness }
}

/// Detailed balance `nu(x) m_x(y) = nu(y) m_y(x)` on the base.
pub fn reversibility_check(kernel: &RandomWalkKernel, nu: &DiscreteMeasure) -> Result<Reversibility> {
    if !same_space(kernel.space(), nu.space()) {
        return Err(Error::SpaceMismatch);
    }
    let n = kernel.len();
    let pairs = (0..n).flat_map(|x| ((x + 1)..n).map(move |y| (x, y)));
    Ok(balance(pairs, |x| nu.weight(x), |x, y| kernel.entry(x, y)))
}

/// Detailed balance of the lifted walk against a lifted measure.
///
/// Only pairs with at least one nonzero side are visited: `sigma` in the
/// support of `nu~`, `tau` in the support of `m~_sigma`.
pub fn lifted_reversibility_check(
    kernel: &LiftedKernel,
    lifted_nu: &DiscreteMeasure,
) -> Result<Reversibility> {
    if !same_space(kernel.space(), lifted_nu.space()) {
        return Err(Error::SpaceMismatch);
    }
    let support: Vec<usize> = lifted_nu.support().into_iter().map(|(i, _)| i).collect();
    let pairs: Vec<(usize, usize)> = support
        .iter()
        .flat_map(|&s| kernel.row(s).iter().map(move |&(t, _)| (s, t)))
        .filter(|(s, t)| s != t)
        .collect();
    Ok(balance(pairs.into_iter(), |i| lifted_nu.weight(i), |s, t| kernel.entry(s, t)))
}
