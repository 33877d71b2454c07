//! JSON space files, experiment configs and fixed-precision report output.
//!
//! A space file looks like
//!
//! ```json
//! {
//!   "points": ["a", "b"],
//!   "metric": {"type": "matrix", "data": [[0, 1], [1, 0]]},
//!   "kernel": [[0.7, 0.3], [0.3, 0.7]],
//!   "measure": [0.5, 0.5]
//! }
//! ```
//!
//! `metric` may instead be `{"type": "graph", "data": [["a", "b", 1.0], ...]}`.
//! `kernel` and `measure` are optional.

use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use serde::ser::Serialize;
use serde::Deserialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::concentration::LevyMember;
use crate::curvature::CurvatureReport;
use crate::error::{Error, Result};
use crate::gh::{self, ApproximationMap, Family, FamilyMember, WalkSpec};
use crate::lifting::{LiftedKernel, LiftedSpace, FULL_VALIDATION_LIMIT};
use crate::measure::{DiscreteMeasure, RandomWalkKernel, SpaceRef};
use crate::space::{graph_metric_indexed, FiniteMetricSpace, INGEST_TOL};

/// Rows off by at most this much are renormalized instead of rejected.
pub const RENORMALIZE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, serde::Serialize, Deserialize)]
#[serde(tag = "type", content = "data", rename_all = "lowercase")]
pub enum MetricSpec {
    Matrix(Vec<Vec<f64>>),
    Graph(Vec<(String, String, f64)>),
}

#[derive(Debug, Clone, serde::Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceFile {
    pub points: Vec<String>,
    pub metric: MetricSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measure: Option<Vec<f64>>,
}

/// A parsed and validated space file.
#[derive(Debug, Clone)]
pub struct LoadedSpace {
    pub space: SpaceRef,
    pub kernel: Option<RandomWalkKernel>,
    pub measure: Option<DiscreteMeasure>,
}

impl LoadedSpace {
    pub fn require_kernel(&self) -> Result<&RandomWalkKernel> {
        self.kernel.as_ref().ok_or_else(|| Error::BadConfig("the space file has no \"kernel\"".into()))
    }

    /// The file's measure, or uniform.
    pub fn measure_or_uniform(&self) -> DiscreteMeasure {
        self.measure.clone().unwrap_or_else(|| DiscreteMeasure::uniform(self.space.clone()))
    }
}

/// Rescales a probability vector that misses unit mass by at most
/// [`RENORMALIZE_TOL`]; logs a warning past [`INGEST_TOL`].
fn renormalize(what: &str, mut row: Vec<f64>) -> Result<Vec<f64>> {
    let sum: f64 = row.iter().sum();
    let gap = (sum - 1.0).abs();
    if !(gap <= RENORMALIZE_TOL) || row.iter().any(|&w| !(w >= 0.0)) {
        return Err(Error::InvalidMeasure(format!("{what} has mass {sum} or a negative/non-finite entry")));
    }
    if gap > INGEST_TOL {
        log::warn!("{what} sums to {sum}; renormalizing");
    }
    if gap > 0.0 {
        row.iter_mut().for_each(|w| *w /= sum);
    }
    Ok(row)
}

impl SpaceFile {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::BadConfig(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn load(&self) -> Result<LoadedSpace> {
        let n = self.points.len();
        let space = match &self.metric {
            MetricSpec::Matrix(m) => {
                if m.len() != n {
                    return Err(Error::BadConfig(format!("{n} points but {} matrix rows", m.len())));
                }
                FiniteMetricSpace::new(self.points.clone(), m.clone())?
            }
            MetricSpec::Graph(edges) => {
                let index = |l: &str| {
                    self.points.iter().position(|p| p == l).ok_or_else(|| Error::UnknownLabel(l.to_string()))
                };
                let indexed = edges
                    .iter()
                    .map(|(a, b, w)| Ok((index(a)?, index(b)?, *w)))
                    .collect::<Result<Vec<_>>>()?;
                graph_metric_indexed(self.points.clone(), &indexed)?
            }
        };
        let space = Arc::new(space);
        let kernel = match &self.kernel {
            None => None,
            Some(rows) => {
                if rows.len() != n {
                    return Err(Error::BadConfig(format!("{n} points but {} kernel rows", rows.len())));
                }
                let rows = rows
                    .iter()
                    .enumerate()
                    .map(|(x, r)| {
                        if r.len() != n {
                            return Err(Error::BadConfig(format!("kernel row {x} has {} entries", r.len())));
                        }
                        renormalize(&format!("kernel row {x}"), r.clone())
                    })
                    .collect::<Result<Vec<_>>>()?;
                Some(RandomWalkKernel::new(space.clone(), rows)?)
            }
        };
        let measure = match &self.measure {
            None => None,
            Some(w) => {
                if w.len() != n {
                    return Err(Error::BadConfig(format!("measure has {} entries for {n} points", w.len())));
                }
                Some(DiscreteMeasure::new(space.clone(), renormalize("measure", w.clone())?)?)
            }
        };
        Ok(LoadedSpace { space, kernel, measure })
    }

    pub fn from_space(space: &FiniteMetricSpace, kernel: Option<&RandomWalkKernel>, measure: Option<&DiscreteMeasure>) -> Self {
        Self {
            points: space.labels().to_vec(),
            metric: MetricSpec::Matrix(space.to_matrix()),
            kernel: kernel.map(RandomWalkKernel::rows),
            measure: measure.map(|m| m.weights().to_vec()),
        }
    }

    /// The lifted space in the same format. The lifted kernel is written out
    /// densely only up to 2000 points.
    pub fn from_lifted(lifted: &LiftedSpace, kernel: Option<&LiftedKernel>, measure: Option<&DiscreteMeasure>) -> Self {
        let dense = kernel.and_then(|k| {
            if k.len() <= FULL_VALIDATION_LIMIT {
                Some(k.to_kernel())
            } else {
                log::warn!("lifted kernel has {} rows; omitted from the export", k.len());
                None
            }
        });
        Self::from_space(lifted.space(), dense.as_ref(), measure)
    }
}

/// Reads and validates a space file.
pub fn read_space(path: impl AsRef<Path>) -> Result<LoadedSpace> {
    SpaceFile::read(path)?.load()
}

/// Family configs for the stability experiment.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum FamilyConfig {
    Cycle {
        sizes: Vec<usize>,
        #[serde(default)]
        walk: WalkSpec,
    },
    Path {
        sizes: Vec<usize>,
        #[serde(default)]
        walk: WalkSpec,
    },
    /// Walks drifting off along a path; expected to fail the Cauchy check.
    Escaping { length: usize, shifts: Vec<usize> },
    Custom { target: SpaceFile, members: Vec<CustomMember> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomMember {
    /// Must carry a kernel.
    pub space: SpaceFile,
    pub map: Vec<usize>,
    /// Claimed constant; the minimal one is used when absent.
    #[serde(default)]
    pub epsilon: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct GhConfig {
    #[serde(flatten)]
    pub family: FamilyConfig,
    #[serde(default)]
    pub kappa0: Option<f64>,
    #[serde(default)]
    pub diameter_bound: Option<f64>,
    /// Target points to compare at; all of them by default.
    #[serde(default)]
    pub probes: Option<Vec<usize>>,
    /// Candidate limit kernel on the target.
    #[serde(default)]
    pub candidate: Option<Vec<Vec<f64>>>,
}

impl FamilyConfig {
    pub fn build(&self) -> Result<Family> {
        match self {
            Self::Cycle { sizes, walk } => gh::cycle_family(sizes, *walk),
            Self::Path { sizes, walk } => gh::path_family(sizes, *walk),
            Self::Escaping { length, shifts } => gh::escaping_family(*length, shifts),
            Self::Custom { target, members } => {
                let target = target.load()?.space;
                let mut out = Vec::with_capacity(members.len());
                for (i, m) in members.iter().enumerate() {
                    let loaded = m.space.load()?;
                    let kernel = loaded
                        .kernel
                        .ok_or_else(|| Error::BadConfig(format!("member {i} has no kernel")))?;
                    let map = match m.epsilon {
                        Some(e) => ApproximationMap::new(loaded.space, target.clone(), m.map.clone(), e)?,
                        None => ApproximationMap::tight(loaded.space, target.clone(), m.map.clone())?,
                    };
                    out.push(FamilyMember::new(kernel, map)?);
                }
                let params = (0..out.len()).collect();
                Ok(Family { target, members: out, params })
            }
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum LevyFamilyConfig {
    /// Complete graphs with uniform measure and a lazy uniform walk.
    Complete {
        sizes: Vec<usize>,
        #[serde(default = "half")]
        laziness: f64,
    },
    /// Complete graphs with the walk jumping to the uniform measure.
    Constant { sizes: Vec<usize> },
    /// Space files with kernels; measures default to uniform.
    Custom { members: Vec<SpaceFile> },
}

fn half() -> f64 {
    0.5
}

#[derive(Debug, Clone, Deserialize)]
pub struct LevyConfig {
    #[serde(flatten)]
    pub family: LevyFamilyConfig,
    #[serde(default)]
    pub kappa0: Option<f64>,
}

impl LevyFamilyConfig {
    pub fn build(&self) -> Result<Vec<LevyMember>> {
        use crate::concentration::{complete_graph_family, constant_kernel_family};
        match self {
            Self::Complete { sizes, laziness } => complete_graph_family(sizes, *laziness),
            Self::Constant { sizes } => constant_kernel_family(sizes),
            Self::Custom { members } => members
                .iter()
                .map(|f| {
                    let l = f.load()?;
                    Ok(LevyMember { kernel: l.require_kernel()?.clone(), measure: l.measure_or_uniform() })
                })
                .collect(),
        }
    }
}

/// Pretty JSON whose floats are written as `{:.16e}`, 17 significant digits.
pub struct FixedFormatter<'a>(PrettyFormatter<'a>);

impl Default for FixedFormatter<'_> {
    fn default() -> Self {
        Self(PrettyFormatter::new())
    }
}

impl Formatter for FixedFormatter<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> std::io::Result<()> {
        self.write_f64(writer, value as f64)
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> std::io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> std::io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Serializes with [`FixedFormatter`]. Non-finite floats become `null`.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedFormatter::default());
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

/// `x,y,d,w,kappa` with point labels.
pub fn curvature_csv(report: &CurvatureReport, space: &FiniteMetricSpace) -> String {
    let mut out = String::from("x,y,d,w,kappa\n");
    for (x, y, d, w, k) in report.pairs(space) {
        out.push_str(&format!(
            "{},{},{d:.16e},{w:.16e},{k:.16e}\n",
            csv_field(space.label(x)),
            csv_field(space.label(y))
        ));
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvature::curvature_report;
    use crate::error::MetricViolation;

    const LAZY_SWAP: &str = r#"{
        "points": ["a", "b"],
        "metric": {"type": "matrix", "data": [[0, 1], [1, 0]]},
        "kernel": [[0.7, 0.3], [0.3, 0.7]]
    }"#;

    #[test]
    fn matrix_file_round_trips() {
        let loaded = SpaceFile::parse(LAZY_SWAP).unwrap().load().unwrap();
        let k = loaded.require_kernel().unwrap();
        assert_eq!(k.entry(0, 1), 0.3);
        assert_eq!(loaded.measure_or_uniform().weights(), &[0.5, 0.5]);
        let again = SpaceFile::from_space(&loaded.space, Some(k), None);
        let text = serde_json::to_string(&again).unwrap();
        let back = SpaceFile::parse(&text).unwrap().load().unwrap();
        assert!(back.space.same_points(&loaded.space));
    }

    #[test]
    fn graph_metric_follows_point_order() {
        let f = SpaceFile::parse(
            r#"{"points": ["c", "a", "b"], "metric": {"type": "graph", "data": [["a", "b", 1], ["b", "c", 2]]}}"#,
        )
        .unwrap();
        let s = f.load().unwrap().space;
        assert_eq!(s.distance(0, 1), 3.0);
        assert_eq!(s.label(0), "c");
        let bad = r#"{"points": ["a"], "metric": {"type": "graph", "data": [["a", "z", 1]]}}"#;
        assert!(matches!(SpaceFile::parse(bad).unwrap().load(), Err(Error::UnknownLabel(_))));
    }

    #[test]
    fn triangle_violation_is_reported() {
        let f = SpaceFile::parse(
            r#"{"points": ["0", "1", "2"], "metric": {"type": "matrix", "data": [[0, 1, 3], [1, 0, 1], [3, 1, 0]]}}"#,
        )
        .unwrap();
        match f.load() {
            Err(Error::InvalidMetric(v)) => {
                assert!(v.contains(&MetricViolation::TriangleViolation { i: 0, k: 2, j: 1 }))
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn near_stochastic_rows_are_renormalized() {
        let text = LAZY_SWAP.replace("[0.7, 0.3], [0.3, 0.7]", "[0.7, 0.3000005], [0.3, 0.7]");
        let k = SpaceFile::parse(&text).unwrap().load().unwrap().kernel.unwrap();
        assert!((k.row_weights(0).iter().sum::<f64>() - 1.0).abs() < 1e-15);
        let text = LAZY_SWAP.replace("[0.7, 0.3], [0.3, 0.7]", "[0.7, 0.31], [0.3, 0.7]");
        assert!(SpaceFile::parse(&text).unwrap().load().is_err());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = LAZY_SWAP.replace("\"points\"", "\"pionts\"");
        assert!(SpaceFile::parse(&text).is_err());
    }

    #[test]
    fn fixed_precision_output() {
        let json = to_json(&serde_json::json!({"x": 0.1, "n": 3, "nan": f64::NAN})).unwrap();
        assert!(json.contains("1.0000000000000001e-1"), "{json}");
        assert!(json.contains("\"n\": 3"));
        assert!(json.contains("null"));
        // floats survive the round trip exactly
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["x"].as_f64(), Some(0.1));
    }

    #[test]
    fn curvature_csv_rows() {
        let loaded = SpaceFile::parse(LAZY_SWAP).unwrap().load().unwrap();
        let r = curvature_report(loaded.require_kernel().unwrap(), 1.0).unwrap();
        let csv = curvature_csv(&r, &loaded.space);
        assert_eq!(csv.lines().count(), 2);
        assert!(csv.lines().nth(1).unwrap().starts_with("a,b,1.0000000000000000e0,"));
    }

    #[test]
    fn family_configs_parse() {
        let c: GhConfig = serde_json::from_str(r#"{"family": "cycle", "sizes": [8, 16], "walk": {"laziness": 0.5}}"#).unwrap();
        assert_eq!(c.family.build().unwrap().members.len(), 2);
        let c: GhConfig = serde_json::from_str(r#"{"family": "escaping", "length": 10, "shifts": [1, 2]}"#).unwrap();
        assert_eq!(c.family.build().unwrap().target.len(), 10);
        let custom = format!(
            r#"{{"family": "custom", "target": {0}, "members": [{{"space": {0}, "map": [0, 1]}}]}}"#,
            LAZY_SWAP
        );
        let c: GhConfig = serde_json::from_str(&custom).unwrap();
        assert_eq!(c.family.build().unwrap().members[0].map.epsilon(), 0.0);
        let l: LevyConfig = serde_json::from_str(r#"{"family": "complete", "sizes": [3, 4]}"#).unwrap();
        assert_eq!(l.family.build().unwrap().len(), 2);
    }
}
