//! Finite metric spaces and their ingestion from matrices or weighted graphs.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::{Error, MetricViolation, Result};

/// Comparison tolerance for metric axioms on user-supplied data.
pub const INGEST_TOL: f64 = 1e-9;

/// Comparison tolerance for internally computed quantities.
pub const INTERNAL_TOL: f64 = 1e-12;

/// A finite set of labelled points with an exact distance matrix.
///
/// Construction validates the metric axioms, so every value of this type
/// is a genuine metric space: zero diagonal, positive off-diagonal entries,
/// exact symmetry and the triangle inequality up to the tolerance used at
/// construction time.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMetricSpace {
    labels: Vec<String>,
    dist: Vec<f64>,
    n: usize,
}

impl FiniteMetricSpace {
    /// Validates `matrix` at the ingestion tolerance and attaches `labels`.
    pub fn new(labels: Vec<String>, matrix: Vec<Vec<f64>>) -> Result<Self> {
        Self::with_tolerance(labels, matrix, INGEST_TOL)
    }

    /// Validates `matrix`, treating deviations up to `tol` as rounding noise.
    ///
    /// Entries within tolerance of symmetric are averaged so that the stored
    /// matrix is exactly symmetric.
    pub fn with_tolerance(labels: Vec<String>, matrix: Vec<Vec<f64>>, tol: f64) -> Result<Self> {
        let n = matrix.len();
        if labels.len() != n {
            return Err(Error::BadConfig(format!(
                "{} labels for a {n}x{n} matrix",
                labels.len()
            )));
        }
        let mut seen = HashMap::with_capacity(n);
        for label in &labels {
            if seen.insert(label.as_str(), ()).is_some() {
                return Err(Error::DuplicateLabel(label.clone()));
            }
        }
        let violations = check_metric(&matrix, tol);
        if !violations.is_empty() {
            return Err(Error::InvalidMetric(violations));
        }
        let mut dist = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = 0.5 * (matrix[i][j] + matrix[j][i]);
                dist[i * n + j] = d;
                dist[j * n + i] = d;
            }
        }
        Ok(Self { labels, dist, n })
    }

    /// Builds a space from a row-major distance buffer that the caller has
    /// already validated.
    pub(crate) fn from_trusted(labels: Vec<String>, dist: Vec<f64>) -> Self {
        let n = labels.len();
        debug_assert_eq!(dist.len(), n * n);
        Self { labels, dist, n }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    #[inline]
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.n + j]
    }

    /// Distances from `i` to every point, in index order.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.dist[i * self.n..(i + 1) * self.n]
    }

    pub fn to_matrix(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    /// `max d(i, j)`, zero for a one-point space.
    pub fn diameter(&self) -> f64 {
        self.dist.iter().copied().fold(0.0, f64::max)
    }

    /// Smallest distance between distinct points, `inf` for a one-point space.
    pub fn min_separation(&self) -> f64 {
        let mut m = f64::INFINITY;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                m = m.min(self.distance(i, j));
            }
        }
        m
    }

    /// The same points with every distance multiplied by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::BadConfig(format!("scale factor {factor} must be positive")));
        }
        Ok(Self {
            labels: self.labels.clone(),
            dist: self.dist.iter().map(|d| d * factor).collect(),
            n: self.n,
        })
    }

    /// Structural equality, used when two handles do not share an allocation.
    pub fn same_points(&self, other: &Self) -> bool {
        std::ptr::eq(self, other) || self == other
    }
}

/// Validates a raw matrix at the ingestion tolerance, labelling points
/// `"0"`, `"1"`, ...
pub fn validate_space(matrix: Vec<Vec<f64>>) -> Result<FiniteMetricSpace> {
    let labels = (0..matrix.len()).map(|i| i.to_string()).collect();
    FiniteMetricSpace::new(labels, matrix)
}

/// Lists every violated metric axiom of `matrix`.
///
/// Triangle violations are reported once per unordered outer pair `i < k`
/// and intermediate point `j`, in lexicographic order.
pub fn check_metric(matrix: &[Vec<f64>], tol: f64) -> Vec<MetricViolation> {
    let n = matrix.len();
    let mut out = Vec::new();
    for (row, r) in matrix.iter().enumerate() {
        if r.len() != n {
            out.push(MetricViolation::NotSquare { rows: n, row, len: r.len() });
        }
    }
    if !out.is_empty() {
        return out;
    }
    for i in 0..n {
        for j in 0..n {
            if !matrix[i][j].is_finite() {
                out.push(MetricViolation::NonFinite { i, j });
            }
        }
    }
    if !out.is_empty() {
        return out;
    }
    for i in 0..n {
        if matrix[i][i].abs() > tol {
            out.push(MetricViolation::NonZeroDiagonal { i });
        }
        for j in 0..n {
            if i == j {
                continue;
            }
            let d = matrix[i][j];
            if d < 0.0 {
                out.push(MetricViolation::NegativeDistance { i, j });
            } else if d == 0.0 {
                out.push(MetricViolation::ZeroOffDiagonal { i, j });
            }
            if i < j && (d - matrix[j][i]).abs() > tol {
                out.push(MetricViolation::NonSymmetric { i, j });
            }
        }
    }
    let triangles: Vec<MetricViolation> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let mut local = Vec::new();
            for k in (i + 1)..n {
                for j in 0..n {
                    if j != i && j != k && matrix[i][k] > matrix[i][j] + matrix[j][k] + tol {
                        local.push(MetricViolation::TriangleViolation { i, k, j });
                    }
                }
            }
            local
        })
        .collect();
    out.extend(triangles);
    out
}

/// All-pairs shortest-path metric of a connected weighted graph.
///
/// Points are labelled in order of first appearance in `edges`. Parallel
/// edges keep the lighter weight.
pub fn graph_metric<S: AsRef<str>>(edges: &[(S, S, f64)]) -> Result<FiniteMetricSpace> {
    let mut labels: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut intern = |s: &str, labels: &mut Vec<String>| -> usize {
        if let Some(&i) = index.get(s) {
            return i;
        }
        labels.push(s.to_string());
        index.insert(s.to_string(), labels.len() - 1);
        labels.len() - 1
    };
    let mut pairs = Vec::with_capacity(edges.len());
    for (a, b, w) in edges {
        let (a, b) = (a.as_ref(), b.as_ref());
        if !(w.is_finite() && *w > 0.0) || a == b {
            return Err(Error::InvalidEdge(a.to_string(), b.to_string(), *w));
        }
        let i = intern(a, &mut labels);
        let j = intern(b, &mut labels);
        pairs.push((i, j, *w));
    }
    graph_metric_indexed(labels, &pairs)
}

/// [`graph_metric`] over pre-indexed vertices; isolated labels make the
/// graph disconnected.
pub fn graph_metric_indexed(
    labels: Vec<String>,
    edges: &[(usize, usize, f64)],
) -> Result<FiniteMetricSpace> {
    let n = labels.len();
    let mut d = vec![f64::INFINITY; n * n];
    for i in 0..n {
        d[i * n + i] = 0.0;
    }
    for &(i, j, w) in edges {
        if i >= n || j >= n || i == j || !(w.is_finite() && w > 0.0) {
            let name = |k: usize| labels.get(k).cloned().unwrap_or_else(|| k.to_string());
            return Err(Error::InvalidEdge(name(i), name(j), w));
        }
        if w < d[i * n + j] {
            d[i * n + j] = w;
            d[j * n + i] = w;
        }
    }
    for k in 0..n {
        for i in 0..n {
            let dik = d[i * n + k];
            if dik.is_infinite() {
                continue;
            }
            for j in 0..n {
                let cand = dik + d[k * n + j];
                if cand < d[i * n + j] {
                    d[i * n + j] = cand;
                }
            }
        }
    }
    if n > 0 && d[..n].iter().any(|x| x.is_infinite()) {
        let mut comp = vec![usize::MAX; n];
        let mut groups: Vec<Vec<String>> = Vec::new();
        for i in 0..n {
            if comp[i] != usize::MAX {
                continue;
            }
            let g = groups.len();
            let mut members = Vec::new();
            for j in 0..n {
                if d[i * n + j].is_finite() {
                    comp[j] = g;
                    members.push(labels[j].clone());
                }
            }
            groups.push(members);
        }
        return Err(Error::DisconnectedGraph(groups));
    }
    let matrix = (0..n).map(|i| d[i * n..(i + 1) * n].to_vec()).collect();
    FiniteMetricSpace::new(labels, matrix)
}
