//! p-coarse Ricci curvature `kappa_p(x, y) = 1 - W_p(m_x, m_y) / d(x, y)`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure::{convolve, RandomWalkKernel};
use crate::sampling::{self, random_measure};
use crate::space::FiniteMetricSpace;
use crate::transport::{atoms, check_exponent, wasserstein, wasserstein_atoms};

/// Slack allowed in the contraction inequality.
pub const CONTRACTION_TOL: f64 = 1e-8;

/// Curvature of every pair of distinct points.
///
/// Diagonal entries of `kappa` and `transport` are `NaN` (serialized as
/// `null`): curvature is only defined for distinct points.
#[derive(Debug, Clone, Serialize)]
pub struct CurvatureReport {
    pub p: f64,
    pub kappa: Vec<Vec<f64>>,
    /// `W_p(m_x, m_y)`.
    pub transport: Vec<Vec<f64>>,
    pub kappa_inf: f64,
    pub argmin_pair: (usize, usize),
    pub kappa_sup: f64,
}

impl CurvatureReport {
    pub fn len(&self) -> usize {
        self.kappa.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kappa.is_empty()
    }

    /// `(x, y, d, W_p, kappa)` for every `x < y`.
    pub fn pairs<'a>(
        &'a self,
        space: &'a FiniteMetricSpace,
    ) -> impl Iterator<Item = (usize, usize, f64, f64, f64)> + 'a {
        let n = self.len();
        (0..n).flat_map(move |x| {
            ((x + 1)..n)
                .map(move |y| (x, y, space.distance(x, y), self.transport[x][y], self.kappa[x][y]))
        })
    }
}

/// `kappa_p(x, y)` for distinct `x`, `y`.
pub fn kappa(kernel: &RandomWalkKernel, x: usize, y: usize, p: f64) -> Result<f64> {
    if x == y {
        return Err(Error::SamePoint(x));
    }
    let w = wasserstein(&kernel.row(x), &kernel.row(y), p)?;
    Ok(1.0 - w / kernel.space().distance(x, y))
}

/// Exhaustive curvature over all `C(n, 2)` pairs.
pub fn curvature_report(kernel: &RandomWalkKernel, p: f64) -> Result<CurvatureReport> {
    let rows: Vec<Vec<(usize, f64)>> = (0..kernel.len()).map(|x| atoms(kernel.row_weights(x))).collect();
    report_from_rows(kernel.space(), &rows, p)
}

/// Curvature report for a walk given as sparse rows on `space`.
pub(crate) fn report_from_rows(
    space: &FiniteMetricSpace,
    rows: &[Vec<(usize, f64)>],
    p: f64,
) -> Result<CurvatureReport> {
    check_exponent(p)?;
    let n = space.len();
    if n < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: n });
    }
    let pairs: Vec<(usize, usize)> =
        (0..n).flat_map(|x| ((x + 1)..n).map(move |y| (x, y))).collect();
    let values: Vec<f64> = pairs
        .par_iter()
        .map(|&(x, y)| wasserstein_atoms(space, &rows[x], &rows[y], p))
        .collect::<Result<_>>()?;

    let mut kappa = vec![vec![f64::NAN; n]; n];
    let mut transport = vec![vec![f64::NAN; n]; n];
    let mut kappa_inf = f64::INFINITY;
    let mut kappa_sup = f64::NEG_INFINITY;
    let mut argmin_pair = (0, 1);
    for (&(x, y), &w) in pairs.iter().zip(&values) {
        let k = 1.0 - w / space.distance(x, y);
        kappa[x][y] = k;
        kappa[y][x] = k;
        transport[x][y] = w;
        transport[y][x] = w;
        if k < kappa_inf {
            kappa_inf = k;
            argmin_pair = (x, y);
        }
        kappa_sup = kappa_sup.max(k);
    }
    Ok(CurvatureReport { p, kappa, transport, kappa_inf, argmin_pair, kappa_sup })
}

/// A sampled pair that broke the contraction inequality.
#[derive(Debug, Clone, Serialize)]
pub struct ContractionWitness {
    pub sample: usize,
    pub mu: Vec<f64>,
    pub nu: Vec<f64>,
    pub before: f64,
    pub after: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ContractionReport {
    pub p: f64,
    pub samples: usize,
    pub seed: u64,
    /// `1 - kappa_inf`.
    pub bound: f64,
    /// Largest `W_p(mu*m, nu*m) / W_p(mu, nu)` seen.
    pub max_ratio: f64,
    pub violations: Vec<ContractionWitness>,
}

impl ContractionReport {
    /// Errors with the first witness if any sample violated the bound.
    pub fn ensure(&self) -> Result<()> {
        match self.violations.first() {
            None => Ok(()),
            Some(w) => Err(Error::ContractViolation {
                sample: w.sample,
                ratio: w.ratio,
                bound: self.bound,
            }),
        }
    }
}

/// Checks `W_p(mu*m, nu*m) <= (1 - kappa_inf) W_p(mu, nu) + 1e-8` on
/// `samples` Dirichlet(1) pairs drawn from `seed`.
pub fn contraction_check(
    kernel: &RandomWalkKernel,
    p: f64,
    kappa_inf: f64,
    samples: usize,
    seed: u64,
) -> Result<ContractionReport> {
    check_exponent(p)?;
    let bound = 1.0 - kappa_inf;
    let mut rng = sampling::rng(seed);
    let space = kernel.space();
    let draws: Vec<_> =
        (0..samples).map(|_| (random_measure(&mut rng, space), random_measure(&mut rng, space))).collect();
    let results: Vec<(f64, f64)> = draws
        .par_iter()
        .map(|(mu, nu)| {
            let before = wasserstein(mu, nu, p)?;
            let after = wasserstein(&convolve(mu, kernel)?, &convolve(nu, kernel)?, p)?;
            Ok((before, after))
        })
        .collect::<Result<_>>()?;

    let mut max_ratio: f64 = 0.0;
    let mut violations = Vec::new();
    for (i, ((mu, nu), &(before, after))) in draws.iter().zip(&results).enumerate() {
        let ratio = if before > 0.0 { after / before } else { 0.0 };
        max_ratio = max_ratio.max(ratio);
        if after > bound * before + CONTRACTION_TOL {
            violations.push(ContractionWitness {
                sample: i,
                mu: mu.weights().to_vec(),
                nu: nu.weights().to_vec(),
                before,
                after,
                ratio,
            });
        }
    }
    Ok(ContractionReport { p, samples, seed, bound, max_ratio, violations })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::measure::DiscreteMeasure;
    use crate::space::{graph_metric, validate_space};
    use crate::transport::brute_force_wasserstein;

    fn lazy_swap(alpha: f64) -> RandomWalkKernel {
        let s = Arc::new(validate_space(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap());
        RandomWalkKernel::new(s, vec![vec![1.0 - alpha, alpha], vec![alpha, 1.0 - alpha]]).unwrap()
    }

    fn triangle() -> Arc<FiniteMetricSpace> {
        Arc::new(
            validate_space(vec![
                vec![0.0, 2.0, 1.0],
                vec![2.0, 0.0, 1.0],
                vec![1.0, 1.0, 0.0],
            ])
            .unwrap(),
        )
    }

    #[test]
    fn identity_kernel_is_flat() {
        let k = RandomWalkKernel::identity(triangle());
        for p in [1.0, 2.0, 3.5] {
            let r = curvature_report(&k, p).unwrap();
            assert!(r.kappa_inf.abs() < 1e-12 && r.kappa_sup.abs() < 1e-12);
        }
    }

    #[test]
    fn constant_kernel_has_curvature_one() {
        let s = triangle();
        let nu = DiscreteMeasure::new(s.clone(), vec![0.2, 0.3, 0.5]).unwrap();
        let r = curvature_report(&RandomWalkKernel::constant(&nu), 2.0).unwrap();
        assert_eq!(r.kappa_inf, 1.0);
        assert_eq!(r.kappa_sup, 1.0);
    }

    #[test]
    fn lazy_swap_curvature() {
        // W_1 = |(1-a) - a| = 0.4 by the 2x2 vertex enumeration
        let k = lazy_swap(0.3);
        assert!((kappa(&k, 0, 1, 1.0).unwrap() - 0.6).abs() < 1e-12);
        assert!(matches!(kappa(&k, 1, 1, 1.0), Err(Error::SamePoint(1))));
    }

    #[test]
    fn four_cycle_antipodes_match_oracle() {
        let s = Arc::new(
            graph_metric(&[("a", "b", 1.0), ("b", "c", 1.0), ("c", "d", 1.0), ("d", "a", 1.0)])
                .unwrap(),
        );
        let rows = vec![
            vec![0.0, 0.5, 0.0, 0.5],
            vec![0.5, 0.0, 0.5, 0.0],
            vec![0.0, 0.5, 0.0, 0.5],
            vec![0.5, 0.0, 0.5, 0.0],
        ];
        let k = RandomWalkKernel::new(s.clone(), rows).unwrap();
        let r = curvature_report(&k, 1.0).unwrap();
        // a and c share their neighbours, so the walk merges them
        let oracle = brute_force_wasserstein(&k.row(0), &k.row(2), 1.0).unwrap();
        assert!((r.kappa[0][2] - (1.0 - oracle / 2.0)).abs() < 1e-9);
        assert!((r.kappa[0][2] - 1.0).abs() < 1e-12);
        let oracle = brute_force_wasserstein(&k.row(0), &k.row(1), 1.0).unwrap();
        assert!((r.kappa[0][1] - (1.0 - oracle)).abs() < 1e-9);
        assert_eq!(r.kappa[0][1], r.kappa[1][0]);
    }

    #[test]
    fn contraction_examples() {
        let k = lazy_swap(0.3);
        let r = contraction_check(&k, 1.0, 0.6, 200, 1).unwrap();
        assert!(r.violations.is_empty());
        assert!(r.max_ratio <= 0.4 + 1e-8);
        r.ensure().unwrap();

        let id = RandomWalkKernel::identity(triangle());
        let r = contraction_check(&id, 2.0, 0.0, 50, 2).unwrap();
        assert!((r.max_ratio - 1.0).abs() < 1e-9);

        let nu = DiscreteMeasure::uniform(triangle());
        let r = contraction_check(&RandomWalkKernel::constant(&nu), 1.0, 1.0, 50, 3).unwrap();
        // convolved measures agree up to rounding in the row sums
        assert!(r.max_ratio < 1e-12);
        assert!(r.violations.is_empty());
    }

    #[test]
    fn overstated_curvature_is_caught() {
        let k = lazy_swap(0.3);
        let r = contraction_check(&k, 1.0, 0.9, 50, 4).unwrap();
        assert!(!r.violations.is_empty());
        assert!(matches!(r.ensure(), Err(Error::ContractViolation { .. })));
    }
}
