//! Invariant measures by contraction iteration and convergence-rate traces.
//!
//! The rate certificate is the geometric envelope `(1 - kappa_inf)^t` coming
//! from a curvature report: one step of the walk contracts `W_p` by at least
//! that factor.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure::{convolve, same_space, DiscreteMeasure, RandomWalkKernel};
use crate::sampling::{self, random_measure};
use crate::transport::{check_exponent, ground_cost, wasserstein, wasserstein_perturbation};

/// Slack allowed when comparing a trace against its envelope.
pub const ENVELOPE_TOL: f64 = 1e-8;

/// One point of a trace.
#[derive(Debug, Clone, Serialize)]
pub struct TraceStep {
    pub t: usize,
    pub value: f64,
    pub bound: f64,
    /// For lifted traces: `D_t / max_x W_p(m^t_x, nu)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
}

/// Values `W_p`-distance-to-target over time with their geometric envelope.
#[derive(Debug, Clone, Serialize)]
pub struct RateTrace {
    pub p: f64,
    /// `1 - kappa_inf`.
    pub rate_bound: f64,
    pub diameter: f64,
    pub steps: Vec<TraceStep>,
}

impl RateTrace {
    /// First step whose value exceeds `bound + 1e-8`.
    pub fn first_violation(&self) -> Option<usize> {
        self.steps.iter().find(|s| s.value > s.bound + ENVELOPE_TOL).map(|s| s.t)
    }

    pub fn envelope_holds(&self) -> bool {
        self.first_violation().is_none()
    }

    /// `value(t + 1) / value(t)` wherever `value(t) > 0`.
    pub fn decay_ratios(&self) -> Vec<(usize, f64)> {
        self.steps
            .windows(2)
            .filter(|w| w[0].value > 0.0)
            .map(|w| (w[1].t, w[1].value / w[0].value))
            .collect()
    }

    /// `t,value,bound` rows with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,value,bound\n");
        for s in &self.steps {
            out.push_str(&format!("{},{:.16e},{:.16e}\n", s.t, s.value, s.bound));
        }
        out
    }
}

/// Result of iterating `mu -> mu * m` to a fixed point.
#[derive(Debug, Clone)]
pub struct Stationary {
    pub measure: DiscreteMeasure,
    pub iterations: usize,
    /// `W_p(nu, nu * m)` at the returned measure.
    pub residual: f64,
}

/// Iterates from the uniform measure until `W_p(nu, nu * m) <= tol`.
pub fn invariant_measure(
    kernel: &RandomWalkKernel,
    p: f64,
    tol: f64,
    max_iter: usize,
) -> Result<DiscreteMeasure> {
    let start = DiscreteMeasure::uniform(kernel.space().clone());
    Ok(invariant_measure_from(kernel, &start, p, tol, max_iter)?.measure)
}

/// [`invariant_measure`] from a chosen start.
///
/// The step `mu_{k+1} - mu_k` is carried as its own vector, `d <- d * m`,
/// so the stopping residual is not swamped by rounding in `mu_k`.
pub fn invariant_measure_from(
    kernel: &RandomWalkKernel,
    start: &DiscreteMeasure,
    p: f64,
    tol: f64,
    max_iter: usize,
) -> Result<Stationary> {
    check_exponent(p)?;
    if !(tol > 0.0) {
        return Err(Error::BadConfig(format!("tolerance {tol} must be positive")));
    }
    let space = kernel.space().clone();
    let mut current = start.weights().to_vec();
    let mut step: Vec<f64> = convolve(start, kernel)?.weights().iter().zip(&current).map(|(a, b)| a - b).collect();
    rebalance(&mut step, start.weights());
    for iterations in 0..=max_iter {
        let here = DiscreteMeasure::from_raw(space.clone(), current.clone());
        let residual = distance_from(&here, &step, p)?;
        if residual <= tol {
            return Ok(Stationary { measure: here, iterations, residual });
        }
        for (c, s) in current.iter_mut().zip(&step) {
            *c = (*c + s).max(0.0);
        }
        step = step_signed(&step, kernel, &current);
    }
    log::warn!("no fixed point within {max_iter} steps; is kappa_inf positive?");
    Err(Error::NoConvergence(max_iter))
}

/// `d * m` for a signed row vector of zero mass. The walk preserves mass, so
/// rounding in the mass would otherwise outlive `d`; it is moved onto `base`.
fn step_signed(d: &[f64], kernel: &RandomWalkKernel, base: &[f64]) -> Vec<f64> {
    let n = kernel.len();
    let mut out = vec![0.0; n];
    for (x, &w) in d.iter().enumerate() {
        if w != 0.0 {
            for (o, &m) in out.iter_mut().zip(kernel.row_weights(x)) {
                *o += w * m;
            }
        }
    }
    rebalance(&mut out, base);
    out
}

fn rebalance(d: &mut [f64], base: &[f64]) {
    let excess: f64 = d.iter().sum();
    for (v, w) in d.iter_mut().zip(base) {
        *v -= excess * w;
    }
}

/// `W_p(nu + d, nu)`, from `d` directly whenever `nu` is thick enough.
fn distance_from(nu: &DiscreteMeasure, d: &[f64], p: f64) -> Result<f64> {
    if let Some(w) = wasserstein_perturbation(nu, d, p)? {
        return Ok(w);
    }
    let moved: Vec<f64> = nu.weights().iter().zip(d).map(|(a, b)| (a + b).max(0.0)).collect();
    let mu = DiscreteMeasure::normalized(nu.space().clone(), moved)?;
    wasserstein(&mu, nu, p)
}

/// `mu - nu` with its rounding mass moved onto `nu`.
fn offset(mu: &[f64], nu: &DiscreteMeasure) -> Vec<f64> {
    let mut d: Vec<f64> = mu.iter().zip(nu.weights()).map(|(a, b)| a - b).collect();
    rebalance(&mut d, nu.weights());
    d
}

/// Pairwise spread of invariant measures found from random starts.
#[derive(Debug, Clone, Serialize)]
pub struct UniquenessReport {
    pub starts: usize,
    pub tol: f64,
    pub max_pairwise: f64,
    pub measures: Vec<Vec<f64>>,
}

impl UniquenessReport {
    pub fn unique(&self) -> bool {
        self.max_pairwise <= 10.0 * self.tol
    }
}

/// Runs [`invariant_measure_from`] from `starts` Dirichlet(1) starts.
pub fn uniqueness_check(
    kernel: &RandomWalkKernel,
    p: f64,
    tol: f64,
    max_iter: usize,
    starts: usize,
    seed: u64,
) -> Result<UniquenessReport> {
    let mut rng = sampling::rng(seed);
    let mut found = Vec::with_capacity(starts);
    for _ in 0..starts {
        let start = random_measure(&mut rng, kernel.space());
        found.push(invariant_measure_from(kernel, &start, p, tol, max_iter)?.measure);
    }
    let mut max_pairwise: f64 = 0.0;
    for i in 0..found.len() {
        for j in (i + 1)..found.len() {
            let d: Vec<f64> = found[i].weights().iter().zip(found[j].weights()).map(|(a, b)| a - b).collect();
            max_pairwise = max_pairwise.max(distance_from(&found[j], &d, p)?);
        }
    }
    Ok(UniquenessReport {
        starts,
        tol,
        max_pairwise,
        measures: found.into_iter().map(DiscreteMeasure::into_weights).collect(),
    })
}

/// `W_p(mu0 * m^t, nu)` for `t = 0..=steps` against `(1 - kappa_inf)^t W_p(mu0, nu)`.
///
/// `nu` should be invariant: the trace follows `(mu0 - nu) * m^t`, which is
/// `mu0 * m^t - nu` exactly when it is.
pub fn convergence_trace(
    kernel: &RandomWalkKernel,
    mu0: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    p: f64,
    kappa_inf: f64,
    steps: usize,
) -> Result<RateTrace> {
    check_exponent(p)?;
    if !same_space(mu0.space(), kernel.space()) || !same_space(nu.space(), kernel.space()) {
        return Err(Error::SpaceMismatch);
    }
    let rate = 1.0 - kappa_inf;
    let initial = wasserstein(mu0, nu, p)?;
    let mut d = offset(mu0.weights(), nu);
    let mut out = Vec::with_capacity(steps + 1);
    for t in 0..=steps {
        if t > 0 {
            d = step_signed(&d, kernel, nu.weights());
        }
        let value = if t == 0 { initial } else { distance_from(nu, &d, p)? };
        out.push(TraceStep { t, value, bound: rate.powi(t as i32) * initial, ratio: None });
    }
    Ok(RateTrace { p, rate_bound: rate, diameter: kernel.space().diameter(), steps: out })
}

/// The lifted distance `D_t = (sum_x nu(x) W_p(m^t_x, nu)^p)^(1/p)`.
///
/// `D_t` is `W_p` between `m^t_* nu` and the Dirac at `nu` on the lifted
/// level, since every coupling with a Dirac marginal is forced. The envelope
/// is `Diam(X) (1 - kappa_inf)^t`. As in [`convergence_trace`], rows are
/// followed as offsets `(delta_x - nu) * m^t`.
pub fn lifted_rate_check(
    kernel: &RandomWalkKernel,
    nu: &DiscreteMeasure,
    p: f64,
    kappa_inf: f64,
    steps: usize,
) -> Result<RateTrace> {
    check_exponent(p)?;
    if !(kappa_inf > 0.0) {
        return Err(Error::BadConfig(format!(
            "lifted rate check needs kappa_inf > 0, got {kappa_inf}"
        )));
    }
    let space = kernel.space();
    if !same_space(nu.space(), space) {
        return Err(Error::SpaceMismatch);
    }
    let n = kernel.len();
    let rate = 1.0 - kappa_inf;
    let diameter = space.diameter();
    let mut rows: Vec<Vec<f64>> = (0..n)
        .map(|x| {
            let mut e = vec![0.0; n];
            e[x] = 1.0;
            offset(&e, nu)
        })
        .collect();
    let mut out = Vec::with_capacity(steps + 1);
    for t in 0..=steps {
        if t > 0 {
            rows = rows.iter().map(|r| step_signed(r, kernel, nu.weights())).collect();
        }
        let mut sum = 0.0;
        let mut max_w: f64 = 0.0;
        for (x, row) in rows.iter().enumerate() {
            let w = distance_from(nu, row, p)?;
            max_w = max_w.max(w);
            sum += nu.weight(x) * ground_cost(w, p);
        }
        let value = sum.powf(1.0 / p);
        let ratio = (max_w > 0.0).then(|| value / max_w);
        out.push(TraceStep { t, value, bound: diameter * rate.powi(t as i32), ratio });
    }
    Ok(RateTrace { p, rate_bound: rate, diameter, steps: out })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::space::validate_space;

    fn lazy_swap(alpha: f64) -> RandomWalkKernel {
        let s = Arc::new(validate_space(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap());
        RandomWalkKernel::new(s, vec![vec![1.0 - alpha, alpha], vec![alpha, 1.0 - alpha]]).unwrap()
    }

    #[test]
    fn constant_kernel_fixes_in_one_step() {
        let k = lazy_swap(0.3);
        let sigma = DiscreteMeasure::new(k.space().clone(), vec![0.2, 0.8]).unwrap();
        let c = RandomWalkKernel::constant(&sigma);
        let nu = invariant_measure(&c, 1.0, 1e-12, 10).unwrap();
        assert!(nu.sup_distance(&sigma) < 1e-15);
    }

    #[test]
    fn lazy_swap_is_symmetric() {
        let nu = invariant_measure(&lazy_swap(0.3), 1.0, 1e-12, 1000).unwrap();
        assert!((nu.weight(0) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn identity_kernel_returns_the_start() {
        let k = lazy_swap(0.3);
        let id = RandomWalkKernel::identity(k.space().clone());
        let start = DiscreteMeasure::new(k.space().clone(), vec![0.9, 0.1]).unwrap();
        let found = invariant_measure_from(&id, &start, 2.0, 1e-10, 5).unwrap();
        assert_eq!(found.iterations, 0);
        assert_eq!(found.residual, 0.0);
    }

    #[test]
    fn swap_kernel_does_not_converge_from_a_dirac() {
        let k = lazy_swap(1.0);
        let start = DiscreteMeasure::dirac(k.space().clone(), 0);
        assert!(matches!(
            invariant_measure_from(&k, &start, 1.0, 1e-9, 50),
            Err(Error::NoConvergence(50))
        ));
    }

    #[test]
    fn lazy_swap_trace_is_exact() {
        let k = lazy_swap(0.3);
        let nu = DiscreteMeasure::uniform(k.space().clone());
        let mu0 = DiscreteMeasure::dirac(k.space().clone(), 0);
        let trace = convergence_trace(&k, &mu0, &nu, 1.0, 0.6, 30).unwrap();
        for s in &trace.steps {
            assert!((s.value - 0.5 * 0.4f64.powi(s.t as i32)).abs() < 1e-9);
        }
        assert!(trace.envelope_holds());
        let same = convergence_trace(&k, &nu, &nu, 1.0, 0.6, 5).unwrap();
        assert!(same.steps.iter().all(|s| s.value == 0.0));
    }

    #[test]
    fn lifted_trace_for_lazy_swap() {
        let k = lazy_swap(0.3);
        let nu = DiscreteMeasure::uniform(k.space().clone());
        let trace = lifted_rate_check(&k, &nu, 1.0, 0.6, 20).unwrap();
        assert!(trace.envelope_holds());
        assert!(trace.steps[0].value <= 1.0);
        for (_, r) in trace.decay_ratios() {
            assert!((r - 0.4).abs() < 1e-6);
        }
        assert!(lifted_rate_check(&k, &nu, 1.0, 0.0, 3).is_err());
    }

    #[test]
    fn constant_kernel_lifted_trace_vanishes() {
        let k = lazy_swap(0.3);
        let sigma = DiscreteMeasure::new(k.space().clone(), vec![0.35, 0.65]).unwrap();
        let c = RandomWalkKernel::constant(&sigma);
        let trace = lifted_rate_check(&c, &sigma, 2.0, 1.0, 4).unwrap();
        assert!(trace.steps[1..].iter().all(|s| s.value < 1e-7));
    }

    #[test]
    fn csv_has_header_and_rows() {
        let k = lazy_swap(0.3);
        let nu = DiscreteMeasure::uniform(k.space().clone());
        let csv = convergence_trace(&k, &nu, &nu, 1.0, 0.6, 2).unwrap().to_csv();
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.starts_with("t,value,bound\n"));
    }
}
