use std::fmt;

use serde::Serialize;

/// A single failed metric axiom, naming the offending indices.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind")]
pub enum MetricViolation {
    NotSquare { rows: usize, row: usize, len: usize },
    NonFinite { i: usize, j: usize },
    NonZeroDiagonal { i: usize },
    NegativeDistance { i: usize, j: usize },
    ZeroOffDiagonal { i: usize, j: usize },
    NonSymmetric { i: usize, j: usize },
    /// `d(i, k) > d(i, j) + d(j, k)`.
    TriangleViolation { i: usize, k: usize, j: usize },
}

impl fmt::Display for MetricViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::NotSquare { rows, row, len } => {
                write!(f, "NotSquare(row {row} has {len} entries, expected {rows})")
            }
            Self::NonFinite { i, j } => write!(f, "NonFinite({i},{j})"),
            Self::NonZeroDiagonal { i } => write!(f, "NonZeroDiagonal({i})"),
            Self::NegativeDistance { i, j } => write!(f, "NegativeDistance({i},{j})"),
            Self::ZeroOffDiagonal { i, j } => write!(f, "ZeroOffDiagonal({i},{j})"),
            Self::NonSymmetric { i, j } => write!(f, "NonSymmetric({i},{j})"),
            Self::TriangleViolation { i, k, j } => write!(f, "TriangleViolation({i},{k},{j})"),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid metric: {}", join(.0))]
    InvalidMetric(Vec<MetricViolation>),
    #[error("graph is disconnected; components: {0:?}")]
    DisconnectedGraph(Vec<Vec<String>>),
    #[error("unknown point label {0:?}")]
    UnknownLabel(String),
    #[error("duplicate point label {0:?}")]
    DuplicateLabel(String),
    #[error("invalid edge ({0}, {1}) with weight {2}")]
    InvalidEdge(String, String, f64),
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("measures or kernels live on different spaces")]
    SpaceMismatch,
    #[error("iteration count {0} outside 1..=1000000")]
    InvalidStepCount(usize),
    #[error("unsupported exponent p = {0}; need 1 <= p < inf")]
    UnsupportedExponent(f64),
    #[error("transport solver failed: {0}")]
    SolverFailure(String),
    #[error("support of size {0} exceeds the brute-force limit of 4")]
    SupportTooLarge(usize),
    #[error("curvature is undefined for the same point {0}")]
    SamePoint(usize),
    #[error("space needs at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("contraction violated by sample {sample}: ratio {ratio} > {bound}")]
    ContractViolation { sample: usize, ratio: f64, bound: f64 },
    #[error("lifted grid has {0} points, above the hard cap of 20000")]
    GridTooLarge(usize),
    #[error("grid denominator must be at least 1")]
    InvalidGrid,
    #[error("input measure is not invariant: W_p(nu, nu*m) = {0}")]
    NotInvariantInput(f64),
    #[error("no convergence after {0} iterations")]
    NoConvergence(usize),
    #[error("no lift point for target point {target} in member {member}")]
    NoLiftPoint { member: usize, target: usize },
    #[error("internal invariant violated: {0}")]
    InternalInvariantViolation(String),
    #[error("exhaustive search is limited to 5 points and 2000000 candidates, got {0}")]
    ExhaustiveTooLarge(String),
    #[error("curvature lower bound {kappa0} is not uniform: member {member} has inf {inf}")]
    CurvatureNotUniform { member: usize, inf: f64, kappa0: f64 },
    #[error("family diameter {diameter} of member {member} exceeds the configured bound {bound}")]
    UnboundedFamily { member: usize, diameter: f64, bound: f64 },
    #[error("bad configuration: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn join(v: &[MetricViolation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
