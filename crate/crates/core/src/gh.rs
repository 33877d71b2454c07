//! Approximation maps between finite spaces and stability of curvature
//! bounds under convergence of walks.
//!
//! An `epsilon`-approximation map `f: X -> Y` distorts distances by at most
//! `epsilon` and has an `epsilon`-dense image. Walks on a sequence `X_n` are
//! compared on a fixed target `X` by pushing their rows forward along `f_n`.

use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curvature::curvature_report;
use crate::error::{Error, Result};
use crate::measure::{DiscreteMeasure, RandomWalkKernel, SpaceRef};
use crate::space::FiniteMetricSpace;
use crate::transport::{check_exponent, wasserstein};

/// Slack on the quasi-inverse bounds and on lift-point searches.
pub const MAP_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct ApproximationMap {
    source: SpaceRef,
    target: SpaceRef,
    assignment: Vec<usize>,
    epsilon: f64,
}

impl ApproximationMap {
    /// Checks the assignment is total and in range. `epsilon` is the claimed
    /// constant and is not verified here; see [`ApproximationMap::minimal_epsilon`].
    pub fn new(source: SpaceRef, target: SpaceRef, assignment: Vec<usize>, epsilon: f64) -> Result<Self> {
        if assignment.len() != source.len() {
            return Err(Error::BadConfig(format!(
                "map has {} entries for {} source points",
                assignment.len(),
                source.len()
            )));
        }
        if let Some((x, &y)) = assignment.iter().enumerate().find(|(_, &y)| y >= target.len()) {
            return Err(Error::BadConfig(format!("map sends {x} to {y}, outside the target")));
        }
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(Error::BadConfig(format!("epsilon {epsilon} must be finite and nonnegative")));
        }
        Ok(Self { source, target, assignment, epsilon })
    }

    /// Map carrying its own minimal constant.
    pub fn tight(source: SpaceRef, target: SpaceRef, assignment: Vec<usize>) -> Result<Self> {
        let mut f = Self::new(source, target, assignment, 0.0)?;
        f.epsilon = f.minimal_epsilon();
        Ok(f)
    }

    pub fn identity(space: SpaceRef) -> Self {
        let n = space.len();
        Self { source: space.clone(), target: space, assignment: (0..n).collect(), epsilon: 0.0 }
    }

    pub fn source(&self) -> &SpaceRef {
        &self.source
    }

    pub fn target(&self) -> &SpaceRef {
        &self.target
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn apply(&self, x: usize) -> usize {
        self.assignment[x]
    }

    pub fn distortion(&self) -> f64 {
        distortion(&self.source, &self.target, &self.assignment)
    }

    pub fn covering_defect(&self) -> f64 {
        covering_defect(&self.target, &self.assignment)
    }

    pub fn minimal_epsilon(&self) -> f64 {
        self.distortion().max(self.covering_defect())
    }

    /// `f_* mu` on the target.
    pub fn push(&self, mu: &DiscreteMeasure) -> Result<DiscreteMeasure> {
        mu.pushforward(&self.target, &self.assignment)
    }
}

fn distortion(source: &FiniteMetricSpace, target: &FiniteMetricSpace, map: &[usize]) -> f64 {
    let n = source.len();
    let mut worst: f64 = 0.0;
    for x in 0..n {
        for y in (x + 1)..n {
            worst = worst.max((target.distance(map[x], map[y]) - source.distance(x, y)).abs());
        }
    }
    worst
}

fn covering_defect(target: &FiniteMetricSpace, map: &[usize]) -> f64 {
    (0..target.len())
        .map(|y| map.iter().map(|&fx| target.distance(fx, y)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

/// Least `epsilon` for which `assignment` is an `epsilon`-approximation map.
pub fn check_approximation(source: &FiniteMetricSpace, target: &FiniteMetricSpace, assignment: &[usize]) -> f64 {
    distortion(source, target, assignment).max(covering_defect(target, assignment))
}

/// A quasi-inverse with its three certified bounds.
#[derive(Debug, Clone)]
pub struct QuasiInverse {
    pub map: ApproximationMap,
    /// Minimal constant of the returned map; at most `3 epsilon`.
    pub epsilon_prime: f64,
    /// `max_y d_Y(y, f(f'(y)))`; at most `epsilon`.
    pub target_round_trip: f64,
    /// `max_x d_X(x, f'(f(x)))`; at most `2 epsilon`.
    pub source_round_trip: f64,
}

/// Sends each target point to the smallest source index whose image lies
/// within `epsilon` of it.
pub fn quasi_inverse(f: &ApproximationMap) -> Result<QuasiInverse> {
    let (src, tgt) = (&f.source, &f.target);
    let eps = f.epsilon;
    let reach = eps + MAP_TOL;
    let mut back = Vec::with_capacity(tgt.len());
    for y in 0..tgt.len() {
        let x = (0..src.len()).find(|&x| tgt.distance(f.apply(x), y) <= reach).ok_or_else(|| {
            Error::BadConfig(format!(
                "target point {y} is farther than epsilon = {eps} from the image; the map is not valid at its epsilon"
            ))
        })?;
        back.push(x);
    }
    let target_round_trip =
        (0..tgt.len()).map(|y| tgt.distance(y, f.apply(back[y]))).fold(0.0, f64::max);
    let source_round_trip =
        (0..src.len()).map(|x| src.distance(x, back[f.apply(x)])).fold(0.0, f64::max);
    let map = ApproximationMap { source: tgt.clone(), target: src.clone(), assignment: back, epsilon: 3.0 * eps };
    let epsilon_prime = map.minimal_epsilon();
    let out = QuasiInverse { map, epsilon_prime, target_round_trip, source_round_trip };
    if epsilon_prime > 3.0 * eps + MAP_TOL
        || target_round_trip > eps + MAP_TOL
        || source_round_trip > 2.0 * eps + MAP_TOL
    {
        return Err(Error::InternalInvariantViolation(format!(
            "quasi-inverse bounds failed at epsilon {eps}: {epsilon_prime} / {target_round_trip} / {source_round_trip}"
        )));
    }
    Ok(out)
}

/// Arbitrary total map between two spaces, with its minimal constant.
pub fn random_map<R: Rng + ?Sized>(rng: &mut R, source: &SpaceRef, target: &SpaceRef) -> ApproximationMap {
    let assignment = (0..source.len()).map(|_| rng.random_range(0..target.len())).collect();
    ApproximationMap::tight(source.clone(), target.clone(), assignment).expect("in range by construction")
}

/// One member of a sequence `(X_n, m^n, f_n: X_n -> X)`.
#[derive(Debug, Clone)]
pub struct FamilyMember {
    pub kernel: RandomWalkKernel,
    pub map: ApproximationMap,
}

impl FamilyMember {
    pub fn new(kernel: RandomWalkKernel, map: ApproximationMap) -> Result<Self> {
        if !Arc::ptr_eq(kernel.space(), map.source()) && !kernel.space().same_points(map.source()) {
            return Err(Error::SpaceMismatch);
        }
        Ok(Self { kernel, map })
    }

    pub fn space(&self) -> &SpaceRef {
        self.kernel.space()
    }
}

/// A family of walks with maps into a common target.
#[derive(Debug, Clone)]
pub struct Family {
    pub target: SpaceRef,
    pub members: Vec<FamilyMember>,
    /// Sizes or shift parameters, for reporting.
    pub params: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MapConvergenceReport {
    pub p: f64,
    pub tol: f64,
    pub probes: Vec<usize>,
    pub epsilons: Vec<f64>,
    /// `lift_points[n][i]`: the point of `X_n` standing in for `probes[i]`.
    pub lift_points: Vec<Vec<usize>>,
    /// Against a candidate limit: `sup_x W_p((f_n)_* m^n_{x_n}, m_x)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub distances: Option<Vec<f64>>,
    /// Without a candidate: `sup_x W_p` between members `n` and `k`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cauchy: Option<Vec<Vec<f64>>>,
    /// `sup_{k > n}` of the Cauchy matrix row.
    pub moduli: Vec<f64>,
    /// Cauchy entries of consecutive members.
    pub increments: Vec<f64>,
    pub converges: bool,
    /// Longest run of member indices along which the tested sequence is
    /// nonincreasing.
    pub best_subsequence: Vec<usize>,
    /// Pushed-forward rows of the last member at each probe.
    pub final_rows: Vec<Vec<f64>>,
}

/// Largest step-to-step ratio accepted as geometric decay.
pub const DECAY_RATIO: f64 = 0.75;

/// Sequence verdict: nonincreasing within `tol`, and either the last value is
/// at most `tol` or every step shrinks by [`DECAY_RATIO`] so the tail sums.
pub fn settles(seq: &[f64], tol: f64) -> bool {
    let Some(&last) = seq.last() else {
        return true;
    };
    if last <= tol {
        return seq.windows(2).all(|w| w[1] <= w[0] + tol);
    }
    seq.len() > 1 && seq.windows(2).all(|w| w[1] <= DECAY_RATIO * w[0])
}

/// Longest nonincreasing (within `tol`) subsequence, as indices.
fn longest_nonincreasing(seq: &[f64], tol: f64) -> Vec<usize> {
    let n = seq.len();
    if n == 0 {
        return Vec::new();
    }
    let mut len = vec![1usize; n];
    let mut prev = vec![usize::MAX; n];
    for j in 0..n {
        for i in 0..j {
            if seq[j] <= seq[i] + tol && len[i] + 1 > len[j] {
                len[j] = len[i] + 1;
                prev[j] = i;
            }
        }
    }
    let mut end = (0..n).max_by_key(|&j| (len[j], std::cmp::Reverse(j))).unwrap();
    let mut out = vec![end];
    while prev[end] != usize::MAX {
        end = prev[end];
        out.push(end);
    }
    out.reverse();
    out
}

/// Point of `X_n` whose image is nearest to `x`, smallest index on ties.
fn lift_point(member: usize, f: &ApproximationMap, x: usize) -> Result<usize> {
    let tgt = f.target();
    let mut best = (f64::INFINITY, usize::MAX);
    for xn in 0..f.source().len() {
        let d = tgt.distance(f.apply(xn), x);
        if d < best.0 {
            best = (d, xn);
        }
    }
    if best.0 > f.epsilon() + MAP_TOL {
        return Err(Error::NoLiftPoint { member, target: x });
    }
    Ok(best.1)
}

/// Compares the pushed-forward walks `(f_n)_* m^n_{x_n}` at each probe
/// `x` (all of the target by default), either against a candidate limit or
/// with each other.
pub fn map_convergence_check(
    family: &Family,
    candidate: Option<&RandomWalkKernel>,
    p: f64,
    tol: f64,
    probes: Option<&[usize]>,
) -> Result<MapConvergenceReport> {
    check_exponent(p)?;
    let target = &family.target;
    let probes: Vec<usize> = match probes {
        Some(pr) => pr.to_vec(),
        None => (0..target.len()).collect(),
    };
    if let Some(&bad) = probes.iter().find(|&&x| x >= target.len()) {
        return Err(Error::BadConfig(format!("probe {bad} is outside the target")));
    }
    if let Some(m) = candidate {
        if !m.space().same_points(target) {
            return Err(Error::SpaceMismatch);
        }
    }
    let mut lift_points = Vec::with_capacity(family.members.len());
    for (n, member) in family.members.iter().enumerate() {
        if !member.map.target().same_points(target) {
            return Err(Error::SpaceMismatch);
        }
        lift_points.push(probes.iter().map(|&x| lift_point(n, &member.map, x)).collect::<Result<Vec<_>>>()?);
    }
    let pushed: Vec<Vec<DiscreteMeasure>> = family
        .members
        .par_iter()
        .zip(&lift_points)
        .map(|(member, lifts)| {
            lifts
                .iter()
                .map(|&xn| {
                    let row = member.map.push(&member.kernel.row(xn))?;
                    // same points, shared handle for the transport calls
                    DiscreteMeasure::new(target.clone(), row.into_weights())
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let sup_between = |a: &[DiscreteMeasure], b: &[DiscreteMeasure]| -> Result<f64> {
        let mut worst: f64 = 0.0;
        for (u, v) in a.iter().zip(b) {
            worst = worst.max(wasserstein(u, v, p)?);
        }
        Ok(worst)
    };

    let count = pushed.len();
    let pairs: Vec<(usize, usize)> = (0..count).flat_map(|n| ((n + 1)..count).map(move |k| (n, k))).collect();
    let values: Vec<f64> =
        pairs.par_iter().map(|&(n, k)| sup_between(&pushed[n], &pushed[k])).collect::<Result<_>>()?;
    let mut cauchy = vec![vec![0.0; count]; count];
    for (&(n, k), &v) in pairs.iter().zip(&values) {
        cauchy[n][k] = v;
        cauchy[k][n] = v;
    }
    let moduli: Vec<f64> = (0..count.saturating_sub(1))
        .map(|n| ((n + 1)..count).map(|k| cauchy[n][k]).fold(0.0, f64::max))
        .collect();
    let increments: Vec<f64> = (0..count.saturating_sub(1)).map(|n| cauchy[n][n + 1]).collect();

    let (distances, tested) = match candidate {
        Some(m) => {
            let limit: Vec<DiscreteMeasure> = probes
                .iter()
                .map(|&x| DiscreteMeasure::new(target.clone(), m.row_weights(x).to_vec()))
                .collect::<Result<_>>()?;
            let d: Vec<f64> = pushed.iter().map(|rows| sup_between(rows, &limit)).collect::<Result<_>>()?;
            (Some(d.clone()), d)
        }
        None => (None, increments.clone()),
    };
    let converges = settles(&tested, tol);
    let best_subsequence = longest_nonincreasing(&tested, tol);
    let final_rows = pushed.last().map(|rows| rows.iter().map(|r| r.weights().to_vec()).collect()).unwrap_or_default();
    Ok(MapConvergenceReport {
        p,
        tol,
        probes,
        epsilons: family.members.iter().map(|m| m.map.epsilon()).collect(),
        lift_points,
        distances,
        cauchy: candidate.is_none().then_some(cauchy),
        moduli,
        increments,
        converges,
        best_subsequence,
        final_rows,
    })
}

/// Walk parameters for the generated families.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WalkSpec {
    /// Mass kept at the current point.
    pub laziness: f64,
    /// Weight of the uniform measure mixed into every row.
    pub mix: f64,
}

impl Default for WalkSpec {
    fn default() -> Self {
        Self { laziness: 0.5, mix: 0.0 }
    }
}

impl WalkSpec {
    fn check(&self) -> Result<()> {
        let ok = |v: f64| (0.0..=1.0).contains(&v);
        if ok(self.laziness) && ok(self.mix) {
            Ok(())
        } else {
            Err(Error::BadConfig(format!("laziness and mix must lie in [0, 1], got {self:?}")))
        }
    }

    fn finish(&self, mut rows: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
        let n = rows.len() as f64;
        for row in &mut rows {
            for w in row.iter_mut() {
                *w = (1.0 - self.mix) * *w + self.mix / n;
            }
        }
        rows
    }
}

/// Cycle of `n` points and circumference 1.
pub fn cycle_space(n: usize) -> Result<SpaceRef> {
    if n < 3 {
        return Err(Error::TooFewPoints { needed: 3, got: n });
    }
    let m: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let k = i.abs_diff(j);
                    k.min(n - k) as f64 / n as f64
                })
                .collect()
        })
        .collect();
    Ok(Arc::new(FiniteMetricSpace::new((0..n).map(|i| i.to_string()).collect(), m)?))
}

/// `n` equally spaced points on `[0, length]`.
pub fn path_space(n: usize, length: f64) -> Result<SpaceRef> {
    if n < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: n });
    }
    let step = length / (n - 1) as f64;
    let m: Vec<Vec<f64>> =
        (0..n).map(|i| (0..n).map(|j| i.abs_diff(j) as f64 * step).collect()).collect();
    Ok(Arc::new(FiniteMetricSpace::new((0..n).map(|i| i.to_string()).collect(), m)?))
}

/// Lazy nearest-neighbour walk on the cycle `cycle_space(n)`.
pub fn cycle_walk(space: &SpaceRef, walk: WalkSpec) -> Result<RandomWalkKernel> {
    walk.check()?;
    let n = space.len();
    let side = (1.0 - walk.laziness) / 2.0;
    let rows = (0..n)
        .map(|x| {
            let mut r = vec![0.0; n];
            r[x] += walk.laziness;
            r[(x + 1) % n] += side;
            r[(x + n - 1) % n] += side;
            r
        })
        .collect();
    RandomWalkKernel::new(space.clone(), walk.finish(rows))
}

/// Lazy nearest-neighbour walk on a path; a missing neighbour's share stays put.
pub fn path_walk(space: &SpaceRef, walk: WalkSpec) -> Result<RandomWalkKernel> {
    walk.check()?;
    let n = space.len();
    let side = (1.0 - walk.laziness) / 2.0;
    let rows = (0..n)
        .map(|x| {
            let mut r = vec![0.0; n];
            r[x] += walk.laziness;
            r[if x + 1 < n { x + 1 } else { x }] += side;
            r[if x > 0 { x - 1 } else { x }] += side;
            r
        })
        .collect();
    RandomWalkKernel::new(space.clone(), walk.finish(rows))
}

fn sorted_sizes(sizes: &[usize]) -> Result<Vec<usize>> {
    if sizes.is_empty() {
        return Err(Error::BadConfig("family needs at least one size".into()));
    }
    let mut s = sizes.to_vec();
    s.sort_unstable();
    s.dedup();
    Ok(s)
}

/// Cycles `C_n` mapped into the largest one by `i -> round(i N / n) mod N`.
pub fn cycle_family(sizes: &[usize], walk: WalkSpec) -> Result<Family> {
    let sizes = sorted_sizes(sizes)?;
    let big = *sizes.last().unwrap();
    let target = cycle_space(big)?;
    let mut members = Vec::new();
    for &n in &sizes {
        let space = if n == big { target.clone() } else { cycle_space(n)? };
        let assignment = (0..n).map(|i| ((i * big * 2 + n) / (2 * n)) % big).collect();
        let claimed = 0.5 / n as f64 + 1.0 / big as f64;
        let map = ApproximationMap::new(space.clone(), target.clone(), assignment, claimed)?;
        members.push(FamilyMember::new(cycle_walk(&space, walk)?, map)?);
    }
    Ok(Family { target, members, params: sizes })
}

/// Paths of `n` points on `[0, 1]` mapped into the finest by rounding.
pub fn path_family(sizes: &[usize], walk: WalkSpec) -> Result<Family> {
    let sizes = sorted_sizes(sizes)?;
    let big = *sizes.last().unwrap();
    let target = path_space(big, 1.0)?;
    let mut members = Vec::new();
    for &n in &sizes {
        let space = if n == big { target.clone() } else { path_space(n, 1.0)? };
        let (a, b) = (n - 1, big - 1);
        let assignment = (0..n).map(|i| (2 * i * b + a) / (2 * a)).collect();
        let claimed = 0.5 / a as f64 + 1.0 / b as f64;
        let map = ApproximationMap::new(space.clone(), target.clone(), assignment, claimed)?;
        members.push(FamilyMember::new(path_walk(&space, walk)?, map)?);
    }
    Ok(Family { target, members, params: sizes })
}

/// Walks drifting away: on the unit-spaced path `P_length`, member `s`
/// sends `x` to the uniform measure on `{x + s, x + s + 1}` (clamped at the
/// end). All maps are identities.
pub fn escaping_family(length: usize, shifts: &[usize]) -> Result<Family> {
    let target = path_space(length, (length - 1) as f64)?;
    let mut members = Vec::new();
    for &s in shifts {
        let rows = (0..length)
            .map(|x| {
                let mut r = vec![0.0; length];
                r[(x + s).min(length - 1)] += 0.5;
                r[(x + s + 1).min(length - 1)] += 0.5;
                r
            })
            .collect();
        let kernel = RandomWalkKernel::new(target.clone(), rows)?;
        members.push(FamilyMember::new(kernel, ApproximationMap::identity(target.clone()))?);
    }
    Ok(Family { target, members, params: shifts.to_vec() })
}

/// Every member with a shared kernel.
pub fn constant_family(kernel: &RandomWalkKernel, copies: usize) -> Family {
    let target = kernel.space().clone();
    let members = (0..copies)
        .map(|_| FamilyMember { kernel: kernel.clone(), map: ApproximationMap::identity(target.clone()) })
        .collect();
    Family { target, members, params: (0..copies).collect() }
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    pub p: f64,
    pub kappa0: f64,
    pub member_inf: Vec<f64>,
    pub member_diameter: Vec<f64>,
    pub convergence: MapConvergenceReport,
    pub limit_kernel: Vec<Vec<f64>>,
    pub limit_inf: f64,
    /// `2 (epsilon_last / min separation + 1e-9)`.
    pub tol: f64,
    pub holds: bool,
}

/// Builds the limit walk on the target from the last pushforwards and checks
/// its curvature stays above `kappa0 - tol`. `kappa0` defaults to the least
/// member infimum.
pub fn stability_experiment(
    family: &Family,
    p: f64,
    kappa0: Option<f64>,
    cauchy_tol: f64,
    diameter_bound: Option<f64>,
) -> Result<StabilityReport> {
    check_exponent(p)?;
    if family.members.is_empty() {
        return Err(Error::BadConfig("empty family".into()));
    }
    let member_diameter: Vec<f64> = family.members.iter().map(|m| m.space().diameter()).collect();
    if let Some(bound) = diameter_bound {
        if let Some((member, &diameter)) = member_diameter.iter().enumerate().find(|(_, &d)| d > bound) {
            return Err(Error::UnboundedFamily { member, diameter, bound });
        }
    }
    let member_inf: Vec<f64> = family
        .members
        .iter()
        .map(|m| curvature_report(&m.kernel, p).map(|r| r.kappa_inf))
        .collect::<Result<_>>()?;
    let least = member_inf.iter().copied().fold(f64::INFINITY, f64::min);
    let kappa0 = kappa0.unwrap_or(least);
    if let Some((member, &inf)) = member_inf.iter().enumerate().find(|(_, &k)| k < kappa0 - 1e-12) {
        return Err(Error::CurvatureNotUniform { member, inf, kappa0 });
    }
    let convergence = map_convergence_check(family, None, p, cauchy_tol, None)?;
    if !convergence.converges {
        log::warn!("Cauchy check did not settle; the limit is the last member's pushforward");
    }
    let limit = RandomWalkKernel::new(family.target.clone(), convergence.final_rows.clone())?;
    let limit_inf = curvature_report(&limit, p)?.kappa_inf;
    let eps_last = family.members.last().unwrap().map.minimal_epsilon();
    let tol = 2.0 * (eps_last / family.target.min_separation() + 1e-9);
    Ok(StabilityReport {
        p,
        kappa0,
        member_inf,
        member_diameter,
        limit_kernel: limit.rows(),
        limit_inf,
        tol,
        holds: convergence.converges && limit_inf >= kappa0 - tol,
        convergence,
    })
}
