//! Predicted large-advection limits: curve averages of the potential, the
//! interval classification with its E-sets, and the minimum over candidates.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discretize::SpaceTimeGrid;
use crate::error::{Error, Result};
use crate::scenario::{CurveAnnotation, ExpectedLimit, IntervalLabel, Scenario};
use crate::subdomain::{subdomain_eigenvalue, EndType, MovingInterval};
use crate::temporal::{limit_eigenvalue_temporal, mixed_degenerate_eigenvalue};

pub const DEFAULT_QUAD_N: usize = 256;

/// Composite Simpson rule with `n` panels (rounded up to even).
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = (n.max(2) + 1) & !1;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + k as f64 * h);
    }
    acc * h / 3.0
}

/// `(1/T) * integral over one period of V(kappa(s), s)`.
pub fn curve_average(
    v: impl Fn(f64, f64) -> f64,
    kappa: impl Fn(f64) -> f64,
    period: f64,
    quad_n: usize,
) -> Result<f64> {
    if quad_n < 8 || quad_n % 2 != 0 {
        return Err(Error::validation(format!(
            "quadrature needs an even panel count >= 8, got {quad_n}"
        )));
    }
    Ok(simpson(|s| v(kappa(s), s), 0.0, period, quad_n) / period)
}

/// Interval labels split into sign classes and the derived E-sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalStructure {
    pub labels: Vec<IntervalLabel>,
    pub a: Vec<usize>,
    pub b: Vec<usize>,
    pub c: Vec<usize>,
    /// Indices `i` of curves `kappa_i` that are maxima of `m`, in `0 ..= N + 1`.
    pub e: Vec<usize>,
    pub e_nn: Vec<usize>,
    pub e_nd: Vec<usize>,
    pub e_dn: Vec<usize>,
    pub e_dd: Vec<usize>,
}

impl CriticalStructure {
    /// Number of interior curves.
    pub fn n(&self) -> usize {
        self.labels.len() - 1
    }

    /// Boundary types of the plateau interval `i`, if it is one.
    pub fn plateau_ends(&self, i: usize) -> Option<(EndType, EndType)> {
        if self.e_nn.contains(&i) {
            Some((EndType::N, EndType::N))
        } else if self.e_nd.contains(&i) {
            Some((EndType::N, EndType::D))
        } else if self.e_dn.contains(&i) {
            Some((EndType::D, EndType::N))
        } else if self.e_dd.contains(&i) {
            Some((EndType::D, EndType::D))
        } else {
            None
        }
    }
}

/// Boundary types of a zero-slope interval from its neighbours' labels.
///
/// A missing neighbour is the end of the domain, which acts like an inflow
/// side. On the left, a `Pos` neighbour flows in (N) and a `Neg` one flows
/// out (D); on the right the roles swap.
fn plateau_type(left: Option<IntervalLabel>, right: Option<IntervalLabel>) -> (EndType, EndType) {
    use IntervalLabel::*;
    let l = match left {
        None | Some(Pos) => EndType::N,
        Some(Neg) => EndType::D,
        Some(Zero) => unreachable!("adjacent zero intervals are rejected"),
    };
    let r = match right {
        None | Some(Neg) => EndType::N,
        Some(Pos) => EndType::D,
        Some(Zero) => unreachable!("adjacent zero intervals are rejected"),
    };
    (l, r)
}

/// Builds sign classes and E-sets from interval labels.
pub fn classify_labels(labels: &[IntervalLabel]) -> Result<CriticalStructure> {
    use IntervalLabel::*;
    if labels.is_empty() {
        return Err(Error::HypothesisViolation("no interval labels".into()));
    }
    for (i, w) in labels.windows(2).enumerate() {
        if w[0] == w[1] {
            return Err(Error::HypothesisViolation(format!(
                "intervals {i} and {} share the label {:?}",
                i + 1,
                w[0]
            )));
        }
    }
    let n = labels.len() - 1;
    let at = |i: isize| -> Option<IntervalLabel> {
        (0..=n as isize).contains(&i).then(|| labels[i as usize])
    };
    let pick = |l: IntervalLabel| -> Vec<usize> { (0..=n).filter(|&i| labels[i] == l).collect() };
    let mut s = CriticalStructure {
        labels: labels.to_vec(),
        a: pick(Neg),
        b: pick(Zero),
        c: pick(Pos),
        e: Vec::new(),
        e_nn: Vec::new(),
        e_nd: Vec::new(),
        e_dn: Vec::new(),
        e_dd: Vec::new(),
    };
    if labels[0] == Neg {
        s.e.push(0);
    }
    for i in 1..=n {
        if labels[i - 1] == Pos && labels[i] == Neg {
            s.e.push(i);
        }
    }
    if labels[n] == Pos {
        s.e.push(n + 1);
    }
    for &i in &s.b.clone() {
        let ends = plateau_type(at(i as isize - 1), at(i as isize + 1));
        match ends {
            (EndType::N, EndType::N) => s.e_nn.push(i),
            (EndType::N, EndType::D) => s.e_nd.push(i),
            (EndType::D, EndType::N) => s.e_dn.push(i),
            (EndType::D, EndType::D) => s.e_dd.push(i),
        }
    }
    let total = s.e_nn.len() + s.e_nd.len() + s.e_dn.len() + s.e_dd.len();
    if total != s.b.len() {
        return Err(Error::HypothesisViolation(
            "zero-slope intervals are not uniquely classified".into(),
        ));
    }
    Ok(s)
}

pub fn classify(scenario: &Scenario) -> Result<CriticalStructure> {
    let labels = scenario
        .annotation
        .as_ref()
        .and_then(|a| a.labels.as_ref())
        .ok_or_else(|| Error::HypothesisViolation("scenario has no interval labels".into()))?;
    classify_labels(labels)
}

/// Where a candidate value comes from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CandidateSource {
    CurveAverage { index: usize },
    Subdomain { index: usize, p: EndType, q: EndType },
    TemporalLimit,
    MixedLimit,
    Explicit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub source: CandidateSource,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedCandidate {
    pub source: CandidateSource,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitPrediction {
    pub candidates: Vec<Candidate>,
    pub minimum: f64,
    pub argmin: CandidateSource,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failed: Vec<FailedCandidate>,
}

impl LimitPrediction {
    pub fn from_candidates(candidates: Vec<Candidate>, failed: Vec<FailedCandidate>) -> Result<Self> {
        let best = candidates
            .iter()
            .min_by(|a, b| a.value.total_cmp(&b.value))
            .ok_or_else(|| {
                Error::HypothesisViolation(match failed.first() {
                    Some(f) => format!("every limit candidate failed; first: {}", f.error),
                    None => "no limit candidates".into(),
                })
            })?;
        Ok(LimitPrediction {
            minimum: best.value,
            argmin: best.source,
            candidates: candidates.clone(),
            failed,
        })
    }

    pub fn single(source: CandidateSource, value: f64) -> Self {
        LimitPrediction {
            candidates: vec![Candidate { source, value }],
            minimum: value,
            argmin: source,
            failed: Vec::new(),
        }
    }
}

fn annotation(scenario: &Scenario) -> Result<&CurveAnnotation> {
    scenario
        .annotation
        .as_ref()
        .ok_or_else(|| Error::HypothesisViolation("scenario has no curve annotation".into()))
}

/// Minimum of the curve averages over the annotated maximum curves.
pub fn predict_limit_nondegenerate(scenario: &Scenario, quad_n: usize) -> Result<LimitPrediction> {
    let a = annotation(scenario)?;
    if a.labels.is_some() {
        return Err(Error::HypothesisViolation(
            "labelled curves describe intervals, not maximum curves".into(),
        ));
    }
    let c = &scenario.coefficients;
    let candidates = a
        .curves
        .iter()
        .enumerate()
        .map(|(i, k)| {
            Ok(Candidate {
                source: CandidateSource::CurveAverage { index: i + 1 },
                value: curve_average(|x, t| c.potential.eval(x, t), |t| k.at(t), c.period, quad_n)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    LimitPrediction::from_candidates(candidates, Vec::new())
}

/// Curve averages over `E` and subdomain eigenvalues over the plateau sets.
pub fn predict_limit_spatial(scenario: &Scenario, grid: &SpaceTimeGrid) -> Result<LimitPrediction> {
    let s = classify(scenario)?;
    let a = annotation(scenario)?;
    let c = &scenario.coefficients;
    let mut candidates = Vec::new();
    for &i in &s.e {
        let k = a.kappa(i);
        candidates.push(Candidate {
            source: CandidateSource::CurveAverage { index: i },
            value: curve_average(|x, t| c.potential.eval(x, t), |t| k.at(t), c.period, DEFAULT_QUAD_N)?,
        });
    }
    let plateaus: Vec<(usize, EndType, EndType)> = [
        (&s.e_nn, EndType::N, EndType::N),
        (&s.e_nd, EndType::N, EndType::D),
        (&s.e_dn, EndType::D, EndType::N),
        (&s.e_dd, EndType::D, EndType::D),
    ]
    .iter()
    .flat_map(|(set, p, q)| set.iter().map(move |&i| (i, *p, *q)))
    .collect();
    let outcomes: Vec<(CandidateSource, Result<f64>)> = plateaus
        .par_iter()
        .map(|&(i, p, q)| {
            let source = CandidateSource::Subdomain { index: i, p, q };
            let interval = MovingInterval::new(a.kappa(i), a.kappa(i + 1));
            let value = subdomain_eigenvalue(c, &interval, p, q, grid).map(|r| r.lambda);
            (source, value)
        })
        .collect();
    let mut failed = Vec::new();
    for (source, value) in outcomes {
        match value {
            Ok(value) => candidates.push(Candidate { source, value }),
            Err(e) => failed.push(FailedCandidate {
                source,
                error: e.to_string(),
            }),
        }
    }
    LimitPrediction::from_candidates(candidates, failed)
}

/// Prediction mode requested explicitly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitMode {
    Nondegenerate,
    Spatial,
    Temporal,
    Mixed,
}

fn mixed_strip(scenario: &Scenario) -> Result<(f64, f64, f64)> {
    let a = annotation(scenario)?;
    let constant = |i: usize| -> Result<f64> {
        let k = &a.curves[i];
        if k.position.depends_on_t() {
            return Err(Error::HypothesisViolation(
                "strip curves of the mixed problem must be constant".into(),
            ));
        }
        Ok(k.at(0.0))
    };
    let (k1, k2) = match a.curves.len() {
        1 => (constant(0)?, constant(0)?),
        2 => (constant(0)?, constant(1)?),
        n => {
            return Err(Error::HypothesisViolation(format!(
                "mixed problem needs one or two strip curves, got {n}"
            )))
        }
    };
    let t_star = scenario
        .temporal_partition_hint
        .as_ref()
        .and_then(|h| h.first().copied())
        .ok_or_else(|| Error::HypothesisViolation("mixed problem needs a switch time hint".into()))?;
    Ok((k1, k2, t_star))
}

pub fn predict_mode(scenario: &Scenario, mode: LimitMode, grid: &SpaceTimeGrid) -> Result<LimitPrediction> {
    match mode {
        LimitMode::Nondegenerate => predict_limit_nondegenerate(scenario, DEFAULT_QUAD_N),
        LimitMode::Spatial => predict_limit_spatial(scenario, grid),
        LimitMode::Temporal => {
            let r = limit_eigenvalue_temporal(scenario, grid)?;
            Ok(LimitPrediction::single(CandidateSource::TemporalLimit, r.lambda))
        }
        LimitMode::Mixed => {
            let (k1, k2, t_star) = mixed_strip(scenario)?;
            let r = mixed_degenerate_eigenvalue(scenario, k1, k2, t_star, grid)?;
            Ok(LimitPrediction::single(CandidateSource::MixedLimit, r.lambda))
        }
    }
}

/// Prediction selected by the scenario's expected-limit descriptor.
pub fn predict(scenario: &Scenario, grid: &SpaceTimeGrid) -> Result<LimitPrediction> {
    let mode = match scenario.expected_limit {
        None => {
            return Err(Error::HypothesisViolation(format!(
                "scenario '{}' has no expected limit",
                scenario.name
            )))
        }
        Some(ExpectedLimit::ExplicitValue(v)) => {
            return Ok(LimitPrediction::single(CandidateSource::Explicit, v))
        }
        Some(ExpectedLimit::CurveAverageMin) => LimitMode::Nondegenerate,
        Some(ExpectedLimit::SpatialFormula) => LimitMode::Spatial,
        Some(ExpectedLimit::TemporalProblem) => LimitMode::Temporal,
        Some(ExpectedLimit::MixedProblem) => LimitMode::Mixed,
    };
    predict_mode(scenario, mode, grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use IntervalLabel::*;

    #[test]
    fn simpson_is_exact_for_cubics() {
        let v = simpson(|s| s * s * s - 2.0 * s, 0.0, 2.0, 8);
        assert!((v - 0.0).abs() < 1e-14);
    }

    #[test]
    fn curve_average_examples() {
        assert_eq!(curve_average(|_, _| 0.3, |_| 0.5, 1.0, 8).unwrap(), 0.3);
        let s = curve_average(|_, t| (2.0 * std::f64::consts::PI * t).sin(), |t| t, 1.0, 256).unwrap();
        assert!(s.abs() < 1e-12);
        let lin = curve_average(|x, _| x, |t| t, 1.0, 64).unwrap();
        assert!((lin - 0.5).abs() < 1e-10);
        assert!(curve_average(|x, _| x, |t| t, 1.0, 7).is_err());
    }

    #[test]
    fn staircase_sets() {
        let labels = [Neg, Pos, Zero, Pos, Neg, Zero, Neg, Zero, Pos, Zero];
        let s = classify_labels(&labels).unwrap();
        assert_eq!(s.a, vec![0, 4, 6]);
        assert_eq!(s.b, vec![2, 5, 7, 9]);
        assert_eq!(s.c, vec![1, 3, 8]);
        assert_eq!(s.e, vec![0, 4]);
        assert_eq!(s.e_nn, vec![9]);
        assert_eq!(s.e_nd, vec![2]);
        assert_eq!(s.e_dn, vec![5]);
        assert_eq!(s.e_dd, vec![7]);
    }

    // One test per row of the endpoint decision table.

    #[test]
    fn left_end_negative_is_a_maximum() {
        assert_eq!(classify_labels(&[Neg]).unwrap().e, vec![0]);
        assert_eq!(classify_labels(&[Neg, Pos, Neg]).unwrap().e, vec![0, 2]);
    }

    #[test]
    fn right_end_positive_is_a_maximum() {
        assert_eq!(classify_labels(&[Pos]).unwrap().e, vec![1]);
        assert_eq!(classify_labels(&[Neg, Pos]).unwrap().e, vec![0, 2]);
    }

    #[test]
    fn interior_pos_neg_is_a_maximum() {
        assert_eq!(classify_labels(&[Pos, Neg]).unwrap().e, vec![1]);
        assert!(classify_labels(&[Neg, Pos]).unwrap().e.iter().all(|&i| i != 1));
    }

    #[test]
    fn left_plateau_rows() {
        assert_eq!(classify_labels(&[Zero, Neg]).unwrap().e_nn, vec![0]);
        assert_eq!(classify_labels(&[Zero, Pos]).unwrap().e_nd, vec![0]);
    }

    #[test]
    fn right_plateau_rows() {
        assert_eq!(classify_labels(&[Pos, Zero]).unwrap().e_nn, vec![1]);
        assert_eq!(classify_labels(&[Neg, Zero]).unwrap().e_dn, vec![1]);
    }

    #[test]
    fn interior_plateau_rows() {
        assert_eq!(classify_labels(&[Pos, Zero, Neg]).unwrap().e_nn, vec![1]);
        assert_eq!(classify_labels(&[Pos, Zero, Pos]).unwrap().e_nd, vec![1]);
        assert_eq!(classify_labels(&[Neg, Zero, Neg]).unwrap().e_dn, vec![1]);
        assert_eq!(classify_labels(&[Neg, Zero, Pos]).unwrap().e_dd, vec![1]);
    }

    #[test]
    fn lone_plateau_is_neumann() {
        let s = classify_labels(&[Zero]).unwrap();
        assert_eq!(s.e_nn, vec![0]);
        assert!(s.e.is_empty());
    }

    #[test]
    fn adjacent_labels_are_rejected() {
        let err = classify_labels(&[Pos, Pos]).unwrap_err();
        assert!(matches!(err, Error::HypothesisViolation(m) if m.contains("share")));
    }

    #[test]
    fn prediction_serializes_with_provenance() {
        let p = LimitPrediction::from_candidates(
            vec![
                Candidate { source: CandidateSource::CurveAverage { index: 0 }, value: 1.0 },
                Candidate {
                    source: CandidateSource::Subdomain { index: 2, p: EndType::N, q: EndType::D },
                    value: 0.5,
                },
            ],
            Vec::new(),
        )
        .unwrap();
        assert_eq!(p.minimum, 0.5);
        let json = serde_json::to_string(&p).unwrap();
        assert!(json.contains(r#""argmin":{"kind":"subdomain","index":2,"p":"N","q":"D"}"#), "{json}");
    }
}
