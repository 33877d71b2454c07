//! Seeded random instances: measures, kernels and metric spaces.
//!
//! All generators take a caller-owned RNG so experiments are reproducible
//! from a single master seed.

use std::sync::Arc;

use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use crate::measure::{DiscreteMeasure, RandomWalkKernel, SpaceRef};
use crate::space::FiniteMetricSpace;

/// The RNG used throughout the crate.
pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    rand::SeedableRng::seed_from_u64(seed)
}

/// A symmetric-Dirichlet(1) probability vector (uniform on the simplex).
pub fn dirichlet_weights<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    let mut w: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    w
}

/// Dirichlet(1) on the whole space.
pub fn random_measure<R: Rng + ?Sized>(rng: &mut R, space: &SpaceRef) -> DiscreteMeasure {
    DiscreteMeasure::from_raw(space.clone(), dirichlet_weights(rng, space.len()))
}

/// Dirichlet(1) weights on `support` random points.
pub fn random_sparse_measure<R: Rng + ?Sized>(
    rng: &mut R,
    space: &SpaceRef,
    support: usize,
) -> DiscreteMeasure {
    let n = space.len();
    let k = support.clamp(1, n);
    let w = dirichlet_weights(rng, k);
    let mut weights = vec![0.0; n];
    for (i, x) in sample(rng, n, k).into_iter().enumerate() {
        weights[x] = w[i];
    }
    DiscreteMeasure::from_raw(space.clone(), weights)
}

/// Each row drawn independently from Dirichlet(1).
pub fn random_kernel<R: Rng + ?Sized>(rng: &mut R, space: &SpaceRef) -> RandomWalkKernel {
    let n = space.len();
    let entries = (0..n).flat_map(|_| dirichlet_weights(rng, n)).collect();
    RandomWalkKernel::from_entries(space.clone(), entries)
}

/// `m_x = theta * sigma + (1 - theta) * r_x` with a shared Dirichlet `sigma`
/// and independent Dirichlet rows `r_x`; larger `theta` contracts harder.
pub fn random_mixing_kernel<R: Rng + ?Sized>(
    rng: &mut R,
    space: &SpaceRef,
    theta: f64,
) -> RandomWalkKernel {
    let n = space.len();
    let sigma = dirichlet_weights(rng, n);
    let entries = (0..n)
        .flat_map(|_| {
            let r = dirichlet_weights(rng, n);
            sigma.iter().zip(r).map(|(s, r)| theta * s + (1.0 - theta) * r).collect::<Vec<_>>()
        })
        .collect();
    RandomWalkKernel::from_entries(space.clone(), entries)
}

/// Points drawn uniformly from `[0, 1]^dim` with the Euclidean metric.
pub fn random_euclidean_space<R: Rng + ?Sized>(rng: &mut R, n: usize, dim: usize) -> SpaceRef {
    loop {
        let pts: Vec<Vec<f64>> =
            (0..n).map(|_| (0..dim).map(|_| rng.random::<f64>()).collect()).collect();
        let matrix: Vec<Vec<f64>> = pts
            .iter()
            .map(|a| {
                pts.iter()
                    .map(|b| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt())
                    .collect()
            })
            .collect();
        let labels = (0..n).map(|i| format!("p{i}")).collect();
        // coincident draws have probability zero but are rejected anyway
        if let Ok(space) = FiniteMetricSpace::new(labels, matrix) {
            return Arc::new(space);
        }
    }
}

/// Off-diagonal distances uniform in `[1, 2]`; the triangle inequality
/// holds automatically since `2 <= 1 + 1`.
pub fn random_banded_space<R: Rng + ?Sized>(rng: &mut R, n: usize) -> SpaceRef {
    let mut matrix = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = 1.0 + rng.random::<f64>();
            matrix[i][j] = d;
            matrix[j][i] = d;
        }
    }
    let labels = (0..n).map(|i| format!("p{i}")).collect();
    Arc::new(FiniteMetricSpace::new(labels, matrix).expect("banded distances form a metric"))
}

/// Metropolis chain for `nu` with uniform proposals: reversible with respect
/// to `nu` by construction.
pub fn metropolis_kernel(nu: &DiscreteMeasure) -> RandomWalkKernel {
    let space = nu.space();
    let n = space.len();
    let q = 1.0 / n as f64;
    let mut entries = vec![0.0; n * n];
    for x in 0..n {
        let mut stay = 1.0;
        for y in (0..n).filter(|&y| y != x) {
            let accept = if nu.weight(x) > 0.0 { (nu.weight(y) / nu.weight(x)).min(1.0) } else { 1.0 };
            entries[x * n + y] = q * accept;
            stay -= q * accept;
        }
        entries[x * n + x] = stay.max(0.0);
    }
    RandomWalkKernel::from_entries(space.clone(), entries)
}
