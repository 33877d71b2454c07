//! Partial and observable diameters, and the Levy-family experiment on
//! lifted spaces.
//!
//! `ObsDiam(X; -kappa)` is a supremum over all 1-Lipschitz observables and
//! is not computed exactly. Every strategy here returns a witness function
//! together with the partial diameter of its pushforward, so each estimate is
//! a certified lower bound.

use std::cmp::Ordering;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curvature::curvature_report;
use crate::error::{Error, Result};
use crate::lifting::build_lifted_space;
use crate::measure::{DiscreteMeasure, RandomWalkKernel, SpaceRef};
use crate::sampling;
use crate::space::FiniteMetricSpace;
use crate::transport::lipschitz_constant;

/// Mass slack when testing whether a window carries `1 - kappa`.
pub const MASS_TOL: f64 = 1e-12;
/// Lipschitz slack accepted on witnesses.
pub const WITNESS_TOL: f64 = 1e-10;
/// Slack on the pulled-back Lipschitz constant.
pub const PULLBACK_TOL: f64 = 1e-8;
/// Exhaustive search is refused above this many points.
pub const EXHAUSTIVE_MAX_POINTS: usize = 5;
/// ... and above this many grid functions.
pub const EXHAUSTIVE_MAX_CANDIDATES: u64 = 2_000_000;

/// A probability measure on the real line with sorted, distinct atoms.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LineMeasure {
    support: Vec<f64>,
    weights: Vec<f64>,
}

impl LineMeasure {
    pub fn new(support: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if support.len() != weights.len() || support.is_empty() {
            return Err(Error::InvalidMeasure("support and weights must be nonempty and match".into()));
        }
        if support.iter().any(|v| !v.is_finite()) || support.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidMeasure("support must be finite and strictly increasing".into()));
        }
        if weights.iter().any(|&w| !(w >= 0.0)) || ((weights.iter().sum::<f64>()) - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidMeasure("weights must be nonnegative and sum to 1".into()));
        }
        Ok(Self { support, weights })
    }

    /// `f_* mu` for an observable given by its values.
    pub fn pushforward(values: &[f64], mu: &[f64]) -> Self {
        let mut atoms: Vec<(f64, f64)> =
            values.iter().zip(mu).filter(|(_, &w)| w > 0.0).map(|(&v, &w)| (v, w)).collect();
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut support: Vec<f64> = Vec::with_capacity(atoms.len());
        let mut weights: Vec<f64> = Vec::with_capacity(atoms.len());
        for (v, w) in atoms {
            if support.last() == Some(&v) {
                *weights.last_mut().unwrap() += w;
            } else {
                support.push(v);
                weights.push(w);
            }
        }
        Self { support, weights }
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }
}

/// Smallest `max - min` over sets of atoms carrying mass `>= 1 - kappa`.
///
/// Only contiguous windows are scanned: any set spans a window of the sorted
/// support with at least its mass and the same diameter.
pub fn partial_diameter(m: &LineMeasure, kappa: f64) -> f64 {
    if kappa >= 1.0 || m.len() <= 1 {
        return 0.0;
    }
    let need = 1.0 - kappa.max(0.0) - MASS_TOL;
    let (s, w) = (&m.support, &m.weights);
    let mut best = f64::INFINITY;
    let mut mass = 0.0;
    let mut lo = 0;
    for hi in 0..s.len() {
        mass += w[hi];
        while lo < hi && mass - w[lo] >= need {
            mass -= w[lo];
            lo += 1;
        }
        if mass >= need {
            best = best.min(s[hi] - s[lo]);
        }
    }
    // a full window always qualifies, up to rounding in the sum
    if best.is_infinite() {
        s[s.len() - 1] - s[0]
    } else {
        best
    }
}

/// Oracle: minimum over every subset of atoms. At most 20 atoms.
pub fn partial_diameter_exhaustive(m: &LineMeasure, kappa: f64) -> Result<f64> {
    let n = m.len();
    if n > 20 {
        return Err(Error::ExhaustiveTooLarge(format!("{n} atoms")));
    }
    if kappa >= 1.0 {
        return Ok(0.0);
    }
    let need = 1.0 - kappa.max(0.0) - MASS_TOL;
    let mut best = f64::INFINITY;
    for mask in 1u32..(1 << n) {
        let (mut mass, mut lo, mut hi) = (0.0, f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..n {
            if mask & (1 << i) != 0 {
                mass += m.weights[i];
                lo = lo.min(m.support[i]);
                hi = hi.max(m.support[i]);
            }
        }
        if mass >= need {
            best = best.min(hi - lo);
        }
    }
    Ok(if best.is_infinite() { m.support[n - 1] - m.support[0] } else { best })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// The functions `d(a, .)` for every point `a`.
    DistanceFamily,
    /// Random partial data extended by the McShane and Whitney formulas.
    McshaneRandom,
    /// Coordinate ascent inside the Lipschitz polytope.
    LocalSearch,
    /// All grid-valued 1-Lipschitz functions; at most 5 points.
    ExhaustiveTiny,
    /// Best of distance family, McShane and local search.
    Combined,
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| Error::BadConfig(format!("unknown strategy {s:?}")))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ObsDiamEstimate {
    pub kappa: f64,
    pub value: f64,
    pub witness: Vec<f64>,
    pub strategy: Strategy,
    /// Exhaustive search only: the value is the best over the whole grid.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_optimal: Option<bool>,
}

impl ObsDiamEstimate {
    /// Re-derives the value from the witness and checks the Lipschitz bound.
    pub fn verify(&self, space: &FiniteMetricSpace, mu: &[f64]) -> bool {
        lipschitz_constant(space, &self.witness) <= 1.0 + WITNESS_TOL
            && evaluate(mu, &self.witness, self.kappa) == self.value
    }
}

/// `Diam(f_* mu, 1 - kappa)`.
pub fn evaluate(mu: &[f64], f: &[f64], kappa: f64) -> f64 {
    partial_diameter(&LineMeasure::pushforward(f, mu), kappa)
}

/// `max_s (v_s - d(x, s))`: the least 1-Lipschitz extension.
pub fn mcshane_lower(space: &FiniteMetricSpace, known: &[(usize, f64)]) -> Vec<f64> {
    (0..space.len())
        .map(|x| known.iter().map(|&(s, v)| v - space.distance(x, s)).fold(f64::NEG_INFINITY, f64::max))
        .collect()
}

/// `min_s (v_s + d(x, s))`: the greatest 1-Lipschitz extension.
pub fn whitney_upper(space: &FiniteMetricSpace, known: &[(usize, f64)]) -> Vec<f64> {
    (0..space.len())
        .map(|x| known.iter().map(|&(s, v)| v + space.distance(x, s)).fold(f64::INFINITY, f64::min))
        .collect()
}

fn certify(space: &FiniteMetricSpace, mu: &[f64], kappa: f64, mut f: Vec<f64>, strategy: Strategy) -> ObsDiamEstimate {
    let lip = lipschitz_constant(space, &f);
    if lip > 1.0 {
        f.iter_mut().for_each(|v| *v /= lip);
    }
    let value = evaluate(mu, &f, kappa);
    ObsDiamEstimate { kappa, value, witness: f, strategy, grid_optimal: None }
}

/// Larger value wins; the earlier candidate on ties.
fn better(a: ObsDiamEstimate, b: ObsDiamEstimate) -> ObsDiamEstimate {
    if b.value > a.value {
        b
    } else {
        a
    }
}

fn distance_family(space: &FiniteMetricSpace, mu: &[f64], kappa: f64) -> ObsDiamEstimate {
    (0..space.len())
        .map(|a| certify(space, mu, kappa, space.row(a).to_vec(), Strategy::DistanceFamily))
        .reduce(better)
        .expect("nonempty space")
}

fn mcshane_random(space: &FiniteMetricSpace, mu: &[f64], kappa: f64, trials: usize, seed: u64) -> ObsDiamEstimate {
    let n = space.len();
    let diam = space.diameter();
    let mut master = sampling::rng(seed);
    let seeds: Vec<u64> = (0..trials.max(1)).map(|_| master.random()).collect();
    seeds
        .par_iter()
        .map(|&s| {
            let mut rng = sampling::rng(s);
            let k = rng.random_range(1..=n);
            let mut idx: Vec<usize> = (0..n).collect();
            idx.shuffle(&mut rng);
            let mut known: Vec<(usize, f64)> =
                idx[..k].iter().map(|&i| (i, rng.random::<f64>() * diam)).collect();
            // shrink the data until it is 1-Lipschitz on its own support
            let mut lip: f64 = 0.0;
            for a in 0..k {
                for b in (a + 1)..k {
                    let d = space.distance(known[a].0, known[b].0);
                    lip = lip.max((known[a].1 - known[b].1).abs() / d);
                }
            }
            if lip > 1.0 {
                known.iter_mut().for_each(|kv| kv.1 /= lip);
            }
            let lower = certify(space, mu, kappa, mcshane_lower(space, &known), Strategy::McshaneRandom);
            let upper = certify(space, mu, kappa, whitney_upper(space, &known), Strategy::McshaneRandom);
            better(lower, upper)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .reduce(better)
        .expect("at least one trial")
}

fn local_search(space: &FiniteMetricSpace, mu: &[f64], kappa: f64, rounds: usize, seed: u64) -> ObsDiamEstimate {
    let n = space.len();
    let start = distance_family(space, mu, kappa);
    let mut f = start.witness;
    let mut value = start.value;
    let mut rng = sampling::rng(seed);
    let mut order: Vec<usize> = (0..n).collect();
    for _ in 0..rounds {
        order.shuffle(&mut rng);
        let mut improved = false;
        for &x in &order {
            let mut lo = f64::NEG_INFINITY;
            let mut hi = f64::INFINITY;
            for y in (0..n).filter(|&y| y != x) {
                lo = lo.max(f[y] - space.distance(x, y));
                hi = hi.min(f[y] + space.distance(x, y));
            }
            if lo > hi {
                continue;
            }
            let keep = f[x];
            let mut best = (value, keep);
            // endpoints, other values inside the slice, and midpoints between them
            let mut candidates: Vec<f64> =
                [lo, hi].into_iter().chain(f.iter().copied().filter(|v| (lo..=hi).contains(v))).collect();
            candidates.sort_by(f64::total_cmp);
            candidates.dedup();
            let mids: Vec<f64> = candidates.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
            candidates.extend(mids);
            for c in candidates {
                f[x] = c;
                let v = evaluate(mu, &f, kappa);
                if v > best.0 + 1e-15 {
                    best = (v, c);
                }
            }
            f[x] = best.1;
            if best.0 > value {
                value = best.0;
                improved = true;
            }
        }
        if !improved {
            break;
        }
    }
    certify(space, mu, kappa, f, Strategy::LocalSearch)
}

fn exhaustive_tiny(space: &FiniteMetricSpace, mu: &[f64], kappa: f64, levels: usize) -> Result<ObsDiamEstimate> {
    let n = space.len();
    if n > EXHAUSTIVE_MAX_POINTS {
        return Err(Error::ExhaustiveTooLarge(format!("{n} points")));
    }
    let levels = levels.max(2);
    let steps = 2 * levels as u64 - 1;
    let count = steps.checked_pow(n.saturating_sub(1) as u32).unwrap_or(u64::MAX);
    if count > EXHAUSTIVE_MAX_CANDIDATES {
        return Err(Error::ExhaustiveTooLarge(format!("{count} candidates")));
    }
    let diam = space.diameter();
    let h = if levels > 1 { diam / (levels - 1) as f64 } else { 0.0 };
    let values: Vec<f64> = (0..steps).map(|k| (k as f64 - (levels - 1) as f64) * h).collect();
    // partial diameters are translation invariant, so pin f(0) = 0
    let mut f = vec![0.0; n];
    let mut best = (evaluate(mu, &f, kappa), f.clone());
    fn walk(
        i: usize,
        f: &mut Vec<f64>,
        values: &[f64],
        space: &FiniteMetricSpace,
        mu: &[f64],
        kappa: f64,
        best: &mut (f64, Vec<f64>),
    ) {
        if i == f.len() {
            let v = evaluate(mu, f, kappa);
            if v > best.0 {
                *best = (v, f.clone());
            }
            return;
        }
        for &c in values {
            if (0..i).all(|j| (c - f[j]).abs() <= space.distance(i, j) + 1e-12) {
                f[i] = c;
                walk(i + 1, f, values, space, mu, kappa, best);
            }
        }
    }
    if n > 1 {
        walk(1, &mut f, &values, space, mu, kappa, &mut best);
    }
    let mut est = certify(space, mu, kappa, best.1, Strategy::ExhaustiveTiny);
    est.grid_optimal = Some(est.value == best.0);
    Ok(est)
}

/// Certified lower bound for `ObsDiam(X; -kappa)`.
///
/// `budget` is the trial count for `mcshane_random`, the round count for
/// `local_search` and the number of grid levels on `[0, Diam]` for
/// `exhaustive_tiny`.
pub fn obs_diam(
    space: &FiniteMetricSpace,
    mu: &DiscreteMeasure,
    kappa: f64,
    strategy: Strategy,
    budget: usize,
    seed: u64,
) -> Result<ObsDiamEstimate> {
    if !mu.space().same_points(space) {
        return Err(Error::SpaceMismatch);
    }
    if !(0.0..=1.0).contains(&kappa) {
        return Err(Error::BadConfig(format!("kappa {kappa} must lie in [0, 1]")));
    }
    let w = mu.weights();
    Ok(match strategy {
        Strategy::DistanceFamily => distance_family(space, w, kappa),
        Strategy::McshaneRandom => mcshane_random(space, w, kappa, budget, seed),
        Strategy::LocalSearch => local_search(space, w, kappa, budget, seed),
        Strategy::ExhaustiveTiny => exhaustive_tiny(space, w, kappa, budget)?,
        Strategy::Combined => better(
            better(distance_family(space, w, kappa), mcshane_random(space, w, kappa, budget, seed)),
            local_search(space, w, kappa, budget, seed ^ 0x9e37_79b9_7f4a_7c15),
        ),
    })
}

/// `{0} u {2^-j : j = 6..37} u {k/32 : k = 1..31}`, ascending; 64 points.
pub fn kappa_grid() -> Vec<f64> {
    let mut g = vec![0.0];
    g.extend((6..=37).rev().map(|j| 0.5f64.powi(j)));
    g.extend((1..32).map(|k| k as f64 / 32.0));
    g
}

#[derive(Debug, Clone, Serialize)]
pub struct ObsDiamScalar {
    /// `min_kappa max(ObsDiam(X; -kappa), kappa)` over the grid.
    pub value: f64,
    pub kappa_at: f64,
    pub estimates: Vec<ObsDiamEstimate>,
}

/// Scalar observable diameter from [`Strategy::Combined`] estimates on
/// [`kappa_grid`].
pub fn obs_diam_scalar(space: &FiniteMetricSpace, mu: &DiscreteMeasure, budget: usize, seed: u64) -> Result<ObsDiamScalar> {
    obs_diam_scalar_with(space, mu, Strategy::Combined, budget, seed)
}

pub fn obs_diam_scalar_with(
    space: &FiniteMetricSpace,
    mu: &DiscreteMeasure,
    strategy: Strategy,
    budget: usize,
    seed: u64,
) -> Result<ObsDiamScalar> {
    let estimates: Vec<ObsDiamEstimate> = kappa_grid()
        .into_iter()
        .enumerate()
        .map(|(i, k)| obs_diam(space, mu, k, strategy, budget, seed.wrapping_add(i as u64)))
        .collect::<Result<_>>()?;
    let (value, kappa_at) = estimates
        .iter()
        .map(|e| (e.value.max(e.kappa), e.kappa))
        .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal))
        .expect("grid is nonempty");
    Ok(ObsDiamScalar { value, kappa_at, estimates })
}

/// The estimate on `C X` obtained by scaling the witness by `C`.
pub fn rescale_estimate(est: &ObsDiamEstimate, factor: f64, mu: &[f64]) -> ObsDiamEstimate {
    let witness: Vec<f64> = est.witness.iter().map(|v| v * factor).collect();
    let value = evaluate(mu, &witness, est.kappa);
    ObsDiamEstimate { witness, value, ..est.clone() }
}

/// One member `(X_n, mu_n, m^n)` of a Levy experiment.
#[derive(Debug, Clone)]
pub struct LevyMember {
    pub kernel: RandomWalkKernel,
    pub measure: DiscreteMeasure,
}

#[derive(Debug, Clone, Serialize)]
pub struct LevyMemberReport {
    pub points: usize,
    pub kappa_inf: f64,
    pub lifted_points: usize,
    pub lifted_support: usize,
    pub base: f64,
    pub scaled: f64,
    pub lifted: f64,
    /// `max |estimate on C X - C estimate on X|` over the kappa grid.
    pub scaling_error: f64,
    pub scaling_holds: bool,
    /// Largest Lipschitz constant of `x -> g(m_x)` over lifted witnesses.
    pub pullback_lipschitz: f64,
    pub pullback_holds: bool,
    /// Reported only: raw lower bounds need not be ordered.
    pub lifted_at_most_scaled: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct LevyReport {
    pub kappa0: f64,
    /// `1 - kappa0`.
    pub contraction: f64,
    pub grid_denominator: usize,
    pub members: Vec<LevyMemberReport>,
    /// Base scalar estimates in family order.
    pub trend: Vec<f64>,
    pub trend_decreasing: bool,
    pub holds: bool,
}

/// Builds each lifted space at `grid_denominator` with `p = 1`, estimates
/// observable diameters of `X_n`, `C X_n` and `(P_1(X_n), m_* mu_n)`, and
/// checks the scaling and pullback transfers at witness level.
pub fn levy_experiment(
    family: &[LevyMember],
    grid_denominator: usize,
    kappa0: Option<f64>,
    budget: usize,
    seed: u64,
) -> Result<LevyReport> {
    if family.is_empty() {
        return Err(Error::BadConfig("empty family".into()));
    }
    let infs: Vec<f64> = family
        .iter()
        .map(|m| curvature_report(&m.kernel, 1.0).map(|r| r.kappa_inf))
        .collect::<Result<_>>()?;
    let least = infs.iter().copied().fold(f64::INFINITY, f64::min);
    let kappa0 = kappa0.unwrap_or(least);
    if let Some((member, &inf)) = infs.iter().enumerate().find(|(_, &k)| k < kappa0 - 1e-12) {
        return Err(Error::CurvatureNotUniform { member, inf, kappa0 });
    }
    if !(kappa0 > 0.0) {
        let member = infs.iter().position(|&k| k == least).unwrap_or(0);
        return Err(Error::CurvatureNotUniform { member, inf: least, kappa0 });
    }
    let c = 1.0 - kappa0;
    let mut members = Vec::with_capacity(family.len());
    for (i, (member, &kappa_inf)) in family.iter().zip(&infs).enumerate() {
        let member_seed = seed.wrapping_add(1000 * i as u64);
        let space = member.kernel.space();
        if !member.measure.space().same_points(space) {
            return Err(Error::SpaceMismatch);
        }
        let mu = member.measure.weights();
        let base = obs_diam_scalar(space, &member.measure, budget, member_seed)?;

        // C X: rescaled witnesses against fresh evaluation
        let (scaled, scaling_error) = if c > 0.0 {
            let mut worst: f64 = 0.0;
            let mut rows = Vec::with_capacity(base.estimates.len());
            for e in &base.estimates {
                let r = rescale_estimate(e, c, mu);
                worst = worst.max((r.value - c * e.value).abs());
                rows.push((r.value.max(r.kappa), r.kappa));
            }
            let value = rows.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
            (value, worst)
        } else {
            // the scaled space is a point
            (0.0, 0.0)
        };

        let lifted = build_lifted_space(&member.kernel, 1.0, grid_denominator)?;
        let mut support: Vec<usize> = lifted.walkpoint_index().to_vec();
        support.sort_unstable();
        support.dedup();
        let sub = subspace(lifted.space(), &support);
        let mut sub_mu = vec![0.0; support.len()];
        for (x, &w) in mu.iter().enumerate() {
            let at = support.binary_search(&lifted.walkpoint_index()[x]).expect("walkpoint in support");
            sub_mu[at] += w;
        }
        let sub_measure = DiscreteMeasure::normalized(sub.clone(), sub_mu)?;
        let lifted_est = obs_diam_scalar(&sub, &sub_measure, budget, member_seed ^ 0x5bd1_e995)?;

        let mut pullback: f64 = 0.0;
        for e in &lifted_est.estimates {
            // extend from the support to all of the lifted space
            let known: Vec<(usize, f64)> = support.iter().copied().zip(e.witness.iter().copied()).collect();
            let g = mcshane_lower(lifted.space(), &known);
            let h: Vec<f64> = lifted.walkpoint_index().iter().map(|&j| g[j]).collect();
            pullback = pullback.max(lipschitz_constant(space, &h));
        }
        let lifted_value = lifted_est.value;
        members.push(LevyMemberReport {
            points: space.len(),
            kappa_inf,
            lifted_points: lifted.len(),
            lifted_support: support.len(),
            base: base.value,
            scaled,
            lifted: lifted_value,
            scaling_error,
            scaling_holds: scaling_error <= 1e-12,
            pullback_lipschitz: pullback,
            pullback_holds: pullback <= c + PULLBACK_TOL,
            lifted_at_most_scaled: lifted_value <= scaled + 1e-12,
        });
    }
    let trend: Vec<f64> = members.iter().map(|m| m.base).collect();
    let trend_decreasing = trend.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    let holds = members.iter().all(|m| m.scaling_holds && m.pullback_holds);
    Ok(LevyReport { kappa0, contraction: c, grid_denominator, members, trend, trend_decreasing, holds })
}

fn subspace(space: &FiniteMetricSpace, idx: &[usize]) -> SpaceRef {
    let labels = idx.iter().map(|&i| space.label(i).to_string()).collect();
    let dist = idx.iter().flat_map(|&i| idx.iter().map(move |&j| space.distance(i, j))).collect();
    Arc::new(FiniteMetricSpace::from_trusted(labels, dist))
}

/// Complete graph `K_n` with unit distances.
pub fn complete_graph(n: usize) -> Result<SpaceRef> {
    let m = (0..n).map(|i| (0..n).map(|j| if i == j { 0.0 } else { 1.0 }).collect()).collect();
    Ok(Arc::new(FiniteMetricSpace::new((0..n).map(|i| i.to_string()).collect(), m)?))
}

/// `K_n` for each size, uniform measure, walk staying with probability
/// `laziness` and otherwise jumping uniformly to another vertex.
pub fn complete_graph_family(sizes: &[usize], laziness: f64) -> Result<Vec<LevyMember>> {
    sizes
        .iter()
        .map(|&n| {
            if n < 2 {
                return Err(Error::TooFewPoints { needed: 2, got: n });
            }
            let s = complete_graph(n)?;
            let jump = (1.0 - laziness) / (n - 1) as f64;
            let rows = (0..n).map(|x| (0..n).map(|y| if x == y { laziness } else { jump }).collect()).collect();
            Ok(LevyMember { kernel: RandomWalkKernel::new(s.clone(), rows)?, measure: DiscreteMeasure::uniform(s) })
        })
        .collect()
}

/// `K_n` with the walk jumping straight to the uniform measure.
pub fn constant_kernel_family(sizes: &[usize]) -> Result<Vec<LevyMember>> {
    sizes
        .iter()
        .map(|&n| {
            let s = complete_graph(n)?;
            let mu = DiscreteMeasure::uniform(s);
            Ok(LevyMember { kernel: RandomWalkKernel::constant(&mu), measure: mu })
        })
        .collect()
}
