//! Problem instances: coefficients, boundary data, critical-curve annotations
//! and the expected large-advection limit, with a TOML file format.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::discretize::{BoundaryKind, BoundaryPair, RobinForm};
use crate::error::{Error, Result};
use crate::expr::Expr;

pub use crate::catalog::builtin_catalog;

/// Sign tolerance for interval labels and temporal drift classification.
pub const EPS_SIGN: f64 = 1e-8;
/// Probe resolution used when loading files.
pub const LOAD_PROBE: usize = 33;

const PERIODICITY_TOL: f64 = 1e-10;
const DRIFT_MATCH_TOL: f64 = 1e-10;
const RATE_STEP: f64 = 1e-5;
const RATE_TOL: f64 = 1e-6;
const SLOPE_STEP: f64 = 1e-5;
const SLOPE_TOL: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct Coefficients {
    pub period: f64,
    pub diffusion: f64,
    /// Advection potential `m(x, t)`.
    pub m: Expr,
    /// `d m / d x`, supplied in closed form.
    pub dxm: Expr,
    pub potential: Expr,
    /// Present when `dxm(x, t) = b(t)`.
    pub drift_b: Option<Expr>,
}

/// Sign of `dxm` on an interval between consecutive curves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntervalLabel {
    #[serde(alias = "A")]
    Neg,
    #[serde(alias = "B")]
    Zero,
    #[serde(alias = "C")]
    Pos,
}

/// A curve `t -> kappa(t)` with its derivative in closed form.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub position: Expr,
    pub rate: Expr,
}

impl Curve {
    pub fn new(position: &str, rate: &str) -> Result<Self> {
        Ok(Curve {
            position: Expr::parse(position)?,
            rate: Expr::parse(rate)?,
        })
    }

    pub fn constant(value: f64) -> Self {
        Curve {
            position: Expr::constant(value),
            rate: Expr::constant(0.0),
        }
    }

    pub fn at(&self, t: f64) -> f64 {
        self.position.eval(0.0, t)
    }

    pub fn rate_at(&self, t: f64) -> f64 {
        self.rate.eval(0.0, t)
    }
}

/// Declared critical curves.
///
/// Without labels, `curves` lists the spatial local-maximum curves of `m`.
/// With labels, `curves` are the interior curves `kappa_1 < ... < kappa_N`
/// and `labels[i]` is the sign of `dxm` on `(kappa_i, kappa_{i+1})`, where
/// `kappa_0 = 0` and `kappa_{N+1} = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveAnnotation {
    pub curves: Vec<Curve>,
    pub labels: Option<Vec<IntervalLabel>>,
}

impl CurveAnnotation {
    /// `kappa_i` in the labelled indexing, including the fixed ends.
    pub fn kappa(&self, i: usize) -> Curve {
        if i == 0 {
            Curve::constant(0.0)
        } else if i == self.curves.len() + 1 {
            Curve::constant(1.0)
        } else {
            self.curves[i - 1].clone()
        }
    }
}

/// Which limit formula a scenario is expected to follow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExpectedLimit {
    /// Minimum of curve averages over the annotated maximum curves.
    CurveAverageMin,
    /// Curve averages and subdomain eigenvalues selected by interval labels.
    SpatialFormula,
    /// Limit problem built from the sign pattern of `b(t)`.
    TemporalProblem,
    /// Strip problem followed by a full-domain heat segment; the strip comes
    /// from the curves and the switch time from the first partition hint.
    MixedProblem,
    ExplicitValue(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub coefficients: Coefficients,
    pub boundary: BoundaryPair,
    pub annotation: Option<CurveAnnotation>,
    pub temporal_partition_hint: Option<Vec<f64>>,
    pub expected_limit: Option<ExpectedLimit>,
}

// ---------------------------------------------------------------------------
// File schema

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDocument {
    pub name: String,
    #[serde(rename = "T")]
    pub period: f64,
    #[serde(rename = "D", default = "one")]
    pub diffusion: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<IntervalLabel>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partition_hint: Option<Vec<f64>>,
    pub expressions: ExpressionsDocument,
    #[serde(default)]
    pub boundary: BoundaryDocument,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub curves: Vec<CurveDocument>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_limit: Option<ExpectedDocument>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpressionsDocument {
    pub m: String,
    pub dxm: String,
    #[serde(rename = "V")]
    pub potential: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryName {
    Neumann,
    Dirichlet,
    /// `u' = eta u` (left), `u' = -eta u` (right).
    Robin,
    /// `u = eta u'` (left), `u = -eta u'` (right).
    RobinDirichlet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryDocument {
    pub left: BoundaryName,
    pub right: BoundaryName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
}

impl Default for BoundaryDocument {
    fn default() -> Self {
        BoundaryDocument {
            left: BoundaryName::Neumann,
            right: BoundaryName::Neumann,
            eta: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveDocument {
    pub expr: String,
    /// Derivative of `expr`; may be omitted only when `expr` does not depend on `t`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpectedKind {
    CurveAverageMin,
    SpatialFormula,
    TemporalProblem,
    MixedProblem,
    ExplicitValue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpectedDocument {
    pub kind: ExpectedKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
}

impl ScenarioDocument {
    /// Compiles expressions and builds the scenario without probing invariants.
    pub fn compile(&self) -> Result<Scenario> {
        let e = &self.expressions;
        let coefficients = Coefficients {
            period: self.period,
            diffusion: self.diffusion,
            m: Expr::parse(&e.m)?,
            dxm: Expr::parse(&e.dxm)?,
            potential: Expr::parse(&e.potential)?,
            drift_b: e.b.as_deref().map(Expr::parse).transpose()?,
        };
        if let Some(b) = &coefficients.drift_b {
            if b.depends_on_x() {
                return Err(Error::validation("b must not depend on x"));
            }
        }
        let boundary = self.boundary.to_pair()?;
        let curves = self
            .curves
            .iter()
            .map(|c| {
                let position = Expr::parse(&c.expr)?;
                if position.depends_on_x() {
                    return Err(Error::validation(format!("curve '{}' depends on x", c.expr)));
                }
                let rate = match &c.rate {
                    Some(r) => Expr::parse(r)?,
                    None if !position.depends_on_t() => Expr::constant(0.0),
                    None => {
                        return Err(Error::validation(format!(
                            "curve '{}' moves in time but has no rate",
                            c.expr
                        )))
                    }
                };
                Ok(Curve { position, rate })
            })
            .collect::<Result<Vec<_>>>()?;
        let annotation = if curves.is_empty() && self.labels.is_none() {
            None
        } else {
            Some(CurveAnnotation {
                curves,
                labels: self.labels.clone(),
            })
        };
        let expected_limit = match &self.expected_limit {
            None => None,
            Some(doc) => Some(match doc.kind {
                ExpectedKind::CurveAverageMin => ExpectedLimit::CurveAverageMin,
                ExpectedKind::SpatialFormula => ExpectedLimit::SpatialFormula,
                ExpectedKind::TemporalProblem => ExpectedLimit::TemporalProblem,
                ExpectedKind::MixedProblem => ExpectedLimit::MixedProblem,
                ExpectedKind::ExplicitValue => ExpectedLimit::ExplicitValue(doc.value.ok_or_else(
                    || Error::validation("explicit_value expected limit needs a value"),
                )?),
            }),
        };
        Ok(Scenario {
            name: self.name.clone(),
            coefficients,
            boundary,
            annotation,
            temporal_partition_hint: self.partition_hint.clone(),
            expected_limit,
        })
    }
}

impl BoundaryDocument {
    fn to_pair(&self) -> Result<BoundaryPair> {
        let kind = |name: BoundaryName| -> Result<BoundaryKind> {
            Ok(match name {
                BoundaryName::Neumann => BoundaryKind::Neumann,
                BoundaryName::Dirichlet => BoundaryKind::Dirichlet,
                BoundaryName::Robin | BoundaryName::RobinDirichlet => {
                    let eta = self
                        .eta
                        .ok_or_else(|| Error::validation("robin boundary needs eta"))?;
                    if !eta.is_finite() {
                        return Err(Error::validation("robin eta must be finite"));
                    }
                    let form = if name == BoundaryName::Robin {
                        RobinForm::NeumannForm
                    } else {
                        RobinForm::DirichletForm
                    };
                    BoundaryKind::Robin { eta, form }
                }
            })
        };
        Ok(BoundaryPair::new(kind(self.left)?, kind(self.right)?))
    }

    fn from_pair(pair: BoundaryPair) -> Result<Self> {
        let mut eta = None;
        let mut name = |kind: BoundaryKind| -> Result<BoundaryName> {
            Ok(match kind {
                BoundaryKind::Neumann => BoundaryName::Neumann,
                BoundaryKind::Dirichlet => BoundaryName::Dirichlet,
                BoundaryKind::Robin { eta: e, form } => {
                    if eta.is_some_and(|prev| prev != e) {
                        return Err(Error::validation(
                            "file format holds a single Robin parameter for both ends",
                        ));
                    }
                    eta = Some(e);
                    match form {
                        RobinForm::NeumannForm => BoundaryName::Robin,
                        RobinForm::DirichletForm => BoundaryName::RobinDirichlet,
                    }
                }
            })
        };
        let left = name(pair.left)?;
        let right = name(pair.right)?;
        Ok(BoundaryDocument { left, right, eta })
    }
}

impl Scenario {
    pub fn to_document(&self) -> Result<ScenarioDocument> {
        let c = &self.coefficients;
        let (labels, curves) = match &self.annotation {
            None => (None, Vec::new()),
            Some(a) => (
                a.labels.clone(),
                a.curves
                    .iter()
                    .map(|c| CurveDocument {
                        expr: c.position.source().to_string(),
                        rate: Some(c.rate.source().to_string()),
                    })
                    .collect(),
            ),
        };
        let expected_limit = self.expected_limit.map(|e| match e {
            ExpectedLimit::CurveAverageMin => (ExpectedKind::CurveAverageMin, None),
            ExpectedLimit::SpatialFormula => (ExpectedKind::SpatialFormula, None),
            ExpectedLimit::TemporalProblem => (ExpectedKind::TemporalProblem, None),
            ExpectedLimit::MixedProblem => (ExpectedKind::MixedProblem, None),
            ExpectedLimit::ExplicitValue(v) => (ExpectedKind::ExplicitValue, Some(v)),
        });
        Ok(ScenarioDocument {
            name: self.name.clone(),
            period: c.period,
            diffusion: c.diffusion,
            labels,
            partition_hint: self.temporal_partition_hint.clone(),
            expressions: ExpressionsDocument {
                m: c.m.source().to_string(),
                dxm: c.dxm.source().to_string(),
                potential: c.potential.source().to_string(),
                b: c.drift_b.as_ref().map(|b| b.source().to_string()),
            },
            boundary: BoundaryDocument::from_pair(self.boundary)?,
            curves,
            expected_limit: expected_limit.map(|(kind, value)| ExpectedDocument { kind, value }),
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(&self.to_document()?)
            .map_err(|e| Error::Parse(format!("cannot serialize scenario: {e}")))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let doc: ScenarioDocument =
            toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let scenario = doc.compile()?;
        scenario.validate(LOAD_PROBE)?;
        Ok(scenario)
    }

    /// Checks the coefficient and annotation invariants on a `probe x probe` grid.
    pub fn validate(&self, probe: usize) -> Result<()> {
        let probe = probe.max(3);
        let c = &self.coefficients;
        if !(c.period > 0.0 && c.period.is_finite()) {
            return Err(Error::validation(format!("T must be positive, got {}", c.period)));
        }
        if !(c.diffusion > 0.0 && c.diffusion.is_finite()) {
            return Err(Error::validation(format!("D must be positive, got {}", c.diffusion)));
        }
        let period = c.period;
        let xs: Vec<f64> = (0..probe).map(|i| i as f64 / (probe - 1) as f64).collect();
        let ts: Vec<f64> = (0..probe).map(|j| j as f64 * period / (probe - 1) as f64).collect();

        for &t in &ts {
            for &x in &xs {
                for (name, f) in [("m", &c.m), ("dxm", &c.dxm), ("V", &c.potential)] {
                    let a = f.eval(x, t);
                    if !a.is_finite() {
                        return Err(Error::validation_at(
                            format!("{name} is not finite"),
                            Some(x),
                            Some(t),
                        ));
                    }
                    let b = f.eval(x, t + period);
                    if (b - a).abs() > PERIODICITY_TOL * (1.0 + a.abs()) {
                        return Err(Error::validation_at(
                            format!("{name} is not T-periodic"),
                            Some(x),
                            Some(t),
                        ));
                    }
                }
                if let Some(b) = &c.drift_b {
                    let bt = b.eval(x, t);
                    if (b.eval(x, t + period) - bt).abs() > PERIODICITY_TOL * (1.0 + bt.abs()) {
                        return Err(Error::validation_at("b is not T-periodic", None, Some(t)));
                    }
                    if (c.dxm.eval(x, t) - bt).abs() > DRIFT_MATCH_TOL {
                        return Err(Error::validation_at(
                            "dxm differs from b(t)",
                            Some(x),
                            Some(t),
                        ));
                    }
                }
                self.check_slope(x, t)?;
            }
        }

        if let Some(hint) = &self.temporal_partition_hint {
            let mut prev = 0.0;
            for &h in hint {
                if !(h > prev && h < period) {
                    return Err(Error::validation(format!(
                        "partition hint must be strictly increasing in (0, T); offending time {h}"
                    )));
                }
                prev = h;
            }
        }

        if let Some(a) = &self.annotation {
            self.check_annotation(a, &ts)?;
        }
        Ok(())
    }

    fn check_slope(&self, x: f64, t: f64) -> Result<()> {
        let c = &self.coefficients;
        let h = SLOPE_STEP;
        let m = |x: f64| c.m.eval(x, t);
        let fd = if x - h >= 0.0 && x + h <= 1.0 {
            (m(x + h) - m(x - h)) / (2.0 * h)
        } else if x + h <= 1.0 {
            (m(x + h) - m(x)) / h
        } else {
            (m(x) - m(x - h)) / h
        };
        let slope = c.dxm.eval(x, t);
        if (fd - slope).abs() > SLOPE_TOL * (1.0 + slope.abs()) {
            return Err(Error::validation_at(
                format!("dxm = {slope} disagrees with the slope of m ({fd})"),
                Some(x),
                Some(t),
            ));
        }
        Ok(())
    }

    fn check_annotation(&self, a: &CurveAnnotation, ts: &[f64]) -> Result<()> {
        let period = self.coefficients.period;
        for curve in &a.curves {
            for &t in ts {
                let k = curve.at(t);
                if !(0.0..=1.0).contains(&k) {
                    return Err(Error::validation_at(
                        format!("curve '{}' leaves [0, 1]", curve.position),
                        Some(k),
                        Some(t),
                    ));
                }
                let back = curve.at(t + period);
                if (back - k).abs() > PERIODICITY_TOL * (1.0 + k.abs()) {
                    return Err(Error::validation_at(
                        format!("curve '{}' is not T-periodic", curve.position),
                        None,
                        Some(t),
                    ));
                }
                let fd = (curve.at(t + RATE_STEP) - curve.at(t - RATE_STEP)) / (2.0 * RATE_STEP);
                if (fd - curve.rate_at(t)).abs() > RATE_TOL {
                    return Err(Error::validation_at(
                        format!("rate of curve '{}' is not its derivative", curve.position),
                        None,
                        Some(t),
                    ));
                }
            }
        }
        for &t in ts {
            for (i, pair) in a.curves.windows(2).enumerate() {
                if pair[0].at(t) >= pair[1].at(t) {
                    return Err(Error::validation_at(
                        format!("curves {} and {} are not strictly ordered", i + 1, i + 2),
                        None,
                        Some(t),
                    ));
                }
            }
        }
        let Some(labels) = &a.labels else {
            return Ok(());
        };
        let n = a.curves.len();
        if labels.len() != n + 1 {
            return Err(Error::validation(format!(
                "{} curves need {} interval labels, got {}",
                n,
                n + 1,
                labels.len()
            )));
        }
        let dxm = &self.coefficients.dxm;
        for &t in ts {
            for (i, &label) in labels.iter().enumerate() {
                let lo = a.kappa(i).at(t);
                let hi = a.kappa(i + 1).at(t);
                if lo >= hi {
                    return Err(Error::validation_at(
                        format!("interval {i} is empty"),
                        Some(lo),
                        Some(t),
                    ));
                }
                let fractions: &[f64] = match label {
                    IntervalLabel::Zero => &[0.0, 0.25, 0.5, 0.75, 1.0],
                    _ => &[0.25, 0.5, 0.75],
                };
                for &f in fractions {
                    let x = lo + f * (hi - lo);
                    let s = dxm.eval(x, t);
                    let ok = match label {
                        IntervalLabel::Neg => s < -EPS_SIGN,
                        IntervalLabel::Zero => s.abs() <= EPS_SIGN,
                        IntervalLabel::Pos => s > EPS_SIGN,
                    };
                    if !ok {
                        return Err(Error::validation_at(
                            format!("dxm = {s:e} contradicts label {label:?} of interval {i}"),
                            Some(x),
                            Some(t),
                        ));
                    }
                }
            }
        }
        Ok(())
    }
}

pub fn parse_scenario(text: &str) -> Result<Scenario> {
    Scenario::from_toml(text)
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    Scenario::from_toml(&text)
}

pub fn save_scenario(scenario: &Scenario, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, scenario.to_toml()?).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const LINEAR: &str = r#"
name = "linear"
T = 1.0

[expressions]
m = "x"
dxm = "1"
V = "cos(2*pi*x)"

[[curves]]
expr = "1"

[expected_limit]
kind = "curve_average_min"
"#;

    #[test]
    fn loads_constant_slope_file() {
        let s = parse_scenario(LINEAR).unwrap();
        assert_eq!(s.coefficients.diffusion, 1.0);
        assert_eq!(s.coefficients.dxm.eval(0.3, 0.7), 1.0);
        assert_eq!(s.boundary, BoundaryPair::neumann());
        assert_eq!(s.expected_limit, Some(ExpectedLimit::CurveAverageMin));
    }

    #[test]
    fn rejects_unknown_keys_and_bad_expressions() {
        let extra = LINEAR.replace("T = 1.0", "T = 1.0\ncolor = \"red\"");
        assert!(matches!(parse_scenario(&extra), Err(Error::Parse(_))));
        let bad = LINEAR.replace("cos(2*pi*x)", "cos(2*pi*x");
        assert!(matches!(parse_scenario(&bad), Err(Error::Parse(_))));
    }

    #[test]
    fn ordering_violation_reports_time() {
        let text = r#"
name = "crossing"
T = 1.0
labels = ["pos", "zero", "neg"]
[expressions]
m = "0"
dxm = "0"
V = "0"
[[curves]]
expr = "0.3 + 0.3*exp(40*(cos(2*pi*(t-0.3)) - 1))"
rate = "-24*pi*exp(40*(cos(2*pi*(t-0.3)) - 1))*sin(2*pi*(t-0.3))"
[[curves]]
expr = "0.4"
"#;
        match parse_scenario(text) {
            Err(Error::Validation { t: Some(t), .. }) => assert!((t - 0.3).abs() < 0.03, "{t}"),
            other => panic!("expected ordering error, got {other:?}"),
        }
    }

    #[test]
    fn periodicity_and_slope_checks() {
        let bad = LINEAR.replace("cos(2*pi*x)", "t");
        assert!(matches!(parse_scenario(&bad), Err(Error::Validation { .. })));
        let bad = LINEAR.replace("dxm = \"1\"", "dxm = \"2\"");
        assert!(matches!(parse_scenario(&bad), Err(Error::Validation { .. })));
    }

    #[test]
    fn moving_curve_requires_rate() {
        let text = LINEAR.replace("expr = \"1\"", "expr = \"0.5 + 0.1*sin(2*pi*t)\"");
        assert!(matches!(parse_scenario(&text), Err(Error::Validation { .. })));
    }

    #[test]
    fn toml_round_trip() {
        let s = parse_scenario(LINEAR).unwrap();
        let back = parse_scenario(&s.to_toml().unwrap()).unwrap();
        assert_eq!(s, back);
    }
}
