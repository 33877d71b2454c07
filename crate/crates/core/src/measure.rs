//! Probability measures and random-walk kernels on a finite metric space.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::space::{FiniteMetricSpace, INTERNAL_TOL};

/// Shared handle to a space; measures and kernels carry one so that
/// mixing objects from different spaces is caught at the call site.
pub type SpaceRef = Arc<FiniteMetricSpace>;

/// Largest accepted iteration count for [`iterate_kernel`].
pub const MAX_STEPS: usize = 1_000_000;

pub(crate) fn same_space(a: &SpaceRef, b: &SpaceRef) -> bool {
    Arc::ptr_eq(a, b) || a.same_points(b)
}

/// A probability vector over the points of a space.
#[derive(Debug, Clone)]
pub struct DiscreteMeasure {
    space: SpaceRef,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    /// Accepts `weights` if they are nonnegative and sum to one within `1e-12`.
    pub fn new(space: SpaceRef, weights: Vec<f64>) -> Result<Self> {
        check_weights(space.len(), &weights, INTERNAL_TOL)?;
        Ok(Self { space, weights })
    }

    /// Rescales nonnegative `weights` with positive total to unit mass.
    pub fn normalized(space: SpaceRef, mut weights: Vec<f64>) -> Result<Self> {
        if weights.len() != space.len() {
            return Err(Error::InvalidMeasure(format!(
                "{} weights for {} points",
                weights.len(),
                space.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidMeasure("weights must be finite and nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidMeasure("total mass is zero".into()));
        }
        weights.iter_mut().for_each(|w| *w /= total);
        Ok(Self { space, weights })
    }

    pub(crate) fn from_raw(space: SpaceRef, weights: Vec<f64>) -> Self {
        debug_assert_eq!(space.len(), weights.len());
        Self { space, weights }
    }

    /// The point mass at `x`.
    pub fn dirac(space: SpaceRef, x: usize) -> Self {
        let mut weights = vec![0.0; space.len()];
        weights[x] = 1.0;
        Self { space, weights }
    }

    pub fn uniform(space: SpaceRef) -> Self {
        let n = space.len();
        Self { weights: vec![1.0 / n as f64; n], space }
    }

    pub fn space(&self) -> &SpaceRef {
        &self.space
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, x: usize) -> f64 {
        self.weights[x]
    }

    pub fn into_weights(self) -> Vec<f64> {
        self.weights
    }

    /// Atoms with positive mass, in index order.
    pub fn support(&self) -> Vec<(usize, f64)> {
        support_of(&self.weights)
    }

    /// `max_x |mu(x) - nu(x)|`.
    pub fn sup_distance(&self, other: &Self) -> f64 {
        self.weights
            .iter()
            .zip(&other.weights)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Image measure under `map: self.space -> target`, given as an index map.
    pub fn pushforward(&self, target: &SpaceRef, map: &[usize]) -> Result<Self> {
        if map.len() != self.space.len() {
            return Err(Error::BadConfig(format!(
                "map has {} entries for {} points",
                map.len(),
                self.space.len()
            )));
        }
        let mut weights = vec![0.0; target.len()];
        for (x, &w) in self.weights.iter().enumerate() {
            let y = *map.get(x).filter(|&&y| y < target.len()).ok_or_else(|| {
                Error::BadConfig(format!("map sends {x} outside the target"))
            })?;
            weights[y] += w;
        }
        Ok(Self { space: target.clone(), weights })
    }
}

pub(crate) fn support_of(weights: &[f64]) -> Vec<(usize, f64)> {
    weights
        .iter()
        .enumerate()
        .filter(|(_, &w)| w > 0.0)
        .map(|(i, &w)| (i, w))
        .collect()
}

fn check_weights(n: usize, weights: &[f64], tol: f64) -> Result<()> {
    if weights.len() != n {
        return Err(Error::InvalidMeasure(format!("{} weights for {n} points", weights.len())));
    }
    if let Some(i) = weights.iter().position(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::InvalidMeasure(format!("weight {i} is {}", weights[i])));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > tol {
        return Err(Error::InvalidMeasure(format!("total mass {total} differs from 1")));
    }
    Ok(())
}

/// A random walk `x -> m_x`: one probability vector per point.
#[derive(Debug, Clone)]
pub struct RandomWalkKernel {
    space: SpaceRef,
    // row-major n x n
    entries: Vec<f64>,
}

impl RandomWalkKernel {
    /// Every row must be a valid measure (sum within `1e-12`).
    pub fn new(space: SpaceRef, rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = space.len();
        if rows.len() != n {
            return Err(Error::InvalidMeasure(format!("{} kernel rows for {n} points", rows.len())));
        }
        let mut entries = Vec::with_capacity(n * n);
        for (x, row) in rows.iter().enumerate() {
            check_weights(n, row, INTERNAL_TOL)
                .map_err(|e| Error::InvalidMeasure(format!("kernel row {x}: {e}")))?;
            entries.extend_from_slice(row);
        }
        Ok(Self { space, entries })
    }

    pub(crate) fn from_entries(space: SpaceRef, entries: Vec<f64>) -> Self {
        debug_assert_eq!(entries.len(), space.len() * space.len());
        Self { space, entries }
    }

    /// `m_x = delta_x`.
    pub fn identity(space: SpaceRef) -> Self {
        let n = space.len();
        let mut entries = vec![0.0; n * n];
        for x in 0..n {
            entries[x * n + x] = 1.0;
        }
        Self { space, entries }
    }

    /// `m_x = target` for every `x`.
    pub fn constant(target: &DiscreteMeasure) -> Self {
        let n = target.space.len();
        let entries = (0..n).flat_map(|_| target.weights.iter().copied()).collect();
        Self { space: target.space.clone(), entries }
    }

    /// Rows built from per-point measures, all on this kernel's space.
    pub fn from_measures(space: SpaceRef, rows: &[DiscreteMeasure]) -> Result<Self> {
        if rows.len() != space.len() || rows.iter().any(|r| !same_space(&space, &r.space)) {
            return Err(Error::SpaceMismatch);
        }
        let entries = rows.iter().flat_map(|r| r.weights.iter().copied()).collect();
        Ok(Self { space, entries })
    }

    pub fn space(&self) -> &SpaceRef {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.space.len()
    }

    pub fn is_empty(&self) -> bool {
        self.space.is_empty()
    }

    #[inline]
    pub fn entry(&self, x: usize, y: usize) -> f64 {
        self.entries[x * self.space.len() + y]
    }

    pub fn row_weights(&self, x: usize) -> &[f64] {
        let n = self.space.len();
        &self.entries[x * n..(x + 1) * n]
    }

    /// `m_x` as a measure.
    pub fn row(&self, x: usize) -> DiscreteMeasure {
        DiscreteMeasure::from_raw(self.space.clone(), self.row_weights(x).to_vec())
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|x| self.row_weights(x).to_vec()).collect()
    }

    /// The kernel `k_x = self_x * other` (one step of `self`, then one of `other`).
    fn then(&self, other: &Self) -> Self {
        let n = self.space.len();
        let mut entries = vec![0.0; n * n];
        for x in 0..n {
            let out = &mut entries[x * n..(x + 1) * n];
            for (z, &a) in self.row_weights(x).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in out.iter_mut().zip(other.row_weights(z)) {
                    *o += a * b;
                }
            }
            let total: f64 = out.iter().sum();
            out.iter_mut().for_each(|v| *v /= total);
        }
        Self { space: self.space.clone(), entries }
    }
}

/// `(mu * m)(z) = sum_x mu(x) m_x(z)`.
pub fn convolve(mu: &DiscreteMeasure, kernel: &RandomWalkKernel) -> Result<DiscreteMeasure> {
    if !same_space(&mu.space, &kernel.space) {
        return Err(Error::SpaceMismatch);
    }
    let n = kernel.len();
    let mut out = vec![0.0; n];
    for (x, &w) in mu.weights.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        for (o, &k) in out.iter_mut().zip(kernel.row_weights(x)) {
            *o += w * k;
        }
    }
    Ok(DiscreteMeasure::from_raw(mu.space.clone(), out))
}

/// The `t`-step kernel `m^t`, computed by binary powering.
pub fn iterate_kernel(kernel: &RandomWalkKernel, t: usize) -> Result<RandomWalkKernel> {
    if t == 0 || t > MAX_STEPS {
        return Err(Error::InvalidStepCount(t));
    }
    let mut result: Option<RandomWalkKernel> = None;
    let mut power = kernel.clone();
    let mut rest = t;
    loop {
        if rest & 1 == 1 {
            result = Some(match result {
                None => power.clone(),
                Some(r) => r.then(&power),
            });
        }
        rest >>= 1;
        if rest == 0 {
            break;
        }
        power = power.then(&power);
    }
    Ok(result.expect("t >= 1"))
}
