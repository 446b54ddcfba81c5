//! Built-in benchmark scenarios. All have `T = 1` and `D = 1`.
//!
//! Plateau shapes use squared ramps so that `dxm` is C1 and vanishes
//! identically between the curves:
//! `dxm = K (s_l max(kappa1 - x, 0)^2 + s_r max(x - kappa2, 0)^2)`
//! with `K = 400` and signs `s_l, s_r` fixing the labels of the outer intervals.

use crate::scenario::{
    BoundaryDocument, CurveDocument, ExpectedDocument, ExpectedKind, ExpressionsDocument,
    IntervalLabel, Scenario, ScenarioDocument,
};

const RAMP: f64 = 400.0;
const SIN: &str = "sin(2*pi*t)";
const COS: &str = "cos(2*pi*t)";

struct Builder(ScenarioDocument);

impl Builder {
    fn new(name: &str, m: &str, dxm: &str, v: &str) -> Self {
        Builder(ScenarioDocument {
            name: name.into(),
            period: 1.0,
            diffusion: 1.0,
            labels: None,
            partition_hint: None,
            expressions: ExpressionsDocument {
                m: m.into(),
                dxm: dxm.into(),
                potential: v.into(),
                b: None,
            },
            boundary: BoundaryDocument::default(),
            curves: Vec::new(),
            expected_limit: None,
        })
    }

    /// Drift `b(t)` with `m = x b(t)`.
    fn temporal(name: &str, b: &str, v: &str) -> Self {
        let mut s = Self::new(name, &format!("x*({b})"), b, v);
        s.0.expressions.b = Some(b.into());
        s.expect(ExpectedKind::TemporalProblem)
    }

    fn curve(mut self, expr: &str, rate: Option<&str>) -> Self {
        self.0.curves.push(CurveDocument {
            expr: expr.into(),
            rate: rate.map(Into::into),
        });
        self
    }

    fn labels(mut self, labels: &[IntervalLabel]) -> Self {
        self.0.labels = Some(labels.to_vec());
        self
    }

    fn hint(mut self, times: &[f64]) -> Self {
        self.0.partition_hint = Some(times.to_vec());
        self
    }

    fn expect(mut self, kind: ExpectedKind) -> Self {
        self.0.expected_limit = Some(ExpectedDocument { kind, value: None });
        self
    }

    fn build(self) -> Scenario {
        let name = self.0.name.clone();
        self.0
            .compile()
            .unwrap_or_else(|e| panic!("built-in scenario '{name}' is malformed: {e}"))
    }
}

/// A moving curve `c + 0.05 sin(2 pi t)` or `c + 0.05 cos(2 pi t)` with its rate.
fn wobble(center: f64, cosine: bool) -> (String, String) {
    if cosine {
        (
            format!("({center} + 0.05*{COS})"),
            format!("(-0.1*pi*{SIN})"),
        )
    } else {
        (
            format!("({center} + 0.05*{SIN})"),
            format!("(0.1*pi*{COS})"),
        )
    }
}

/// `(m, dxm)` of a squared-ramp plateau between `k1` and `k2`.
///
/// `left` and `right` are the signs of `dxm` outside; `None` means the
/// plateau reaches that end of the domain.
fn plateau(k1: Option<&str>, k2: Option<&str>, left: f64, right: f64) -> (String, String) {
    let mut m = Vec::new();
    let mut dxm = Vec::new();
    if let Some(k1) = k1 {
        let s = left * RAMP;
        dxm.push(format!("{s}*max({k1} - x, 0)^2"));
        m.push(format!("{}*max({k1} - x, 0)^3", -s / 3.0));
    }
    if let Some(k2) = k2 {
        let s = right * RAMP;
        dxm.push(format!("{s}*max(x - {k2}, 0)^2"));
        m.push(format!("{}*max(x - {k2}, 0)^3", s / 3.0));
    }
    (m.join(" + "), dxm.join(" + "))
}

fn plateau_scenario(
    name: &str,
    k1: Option<(f64, bool)>,
    k2: Option<(f64, bool)>,
    left: f64,
    right: f64,
    v: &str,
    labels: &[IntervalLabel],
) -> Scenario {
    let c1 = k1.map(|(c, cos)| wobble(c, cos));
    let c2 = k2.map(|(c, cos)| wobble(c, cos));
    let (m, dxm) = plateau(
        c1.as_ref().map(|c| c.0.as_str()),
        c2.as_ref().map(|c| c.0.as_str()),
        left,
        right,
    );
    let mut b = Builder::new(name, &m, &dxm, v)
        .labels(labels)
        .expect(ExpectedKind::SpatialFormula);
    for c in [c1, c2].into_iter().flatten() {
        b = b.curve(&c.0, Some(&c.1));
    }
    b.build()
}

/// The ten-interval staircase `m = m1(x) (1.5 + sin 2 pi t)`.
///
/// On `(kappa_i, kappa_i + 0.1)` with `u = (x - kappa_i) / 0.1`,
/// `m1' = s_i 16 u^2 (1 - u)^2` and
/// `m1 = C_i + s_i 1.6 (u^3/3 - u^4/2 + u^5/5)`, where `C_{i+1} = C_i + s_i 0.8/15`.
fn staircase() -> Scenario {
    use IntervalLabel::*;
    let labels = [Neg, Pos, Zero, Pos, Neg, Zero, Neg, Zero, Pos, Zero];
    let mut m_parts = Vec::new();
    let mut d_parts = Vec::new();
    let mut c = 0.0;
    for (i, l) in labels.iter().enumerate() {
        let s = match l {
            Neg => -1.0,
            Zero => 0.0,
            Pos => 1.0,
        };
        let u = format!("((x - {:.1})/0.1)", 0.1 * i as f64);
        let (m, d) = if s == 0.0 {
            (format!("{c:?}"), "0".to_string())
        } else {
            (
                format!("({c:?} + {}*({u}^3/3 - {u}^4/2 + {u}^5/5))", s * 1.6),
                format!("{}*{u}^2*(1 - {u})^2", s * 16.0),
            )
        };
        c += s * 0.8 / 15.0;
        if i + 1 < labels.len() {
            let cut = format!("x < {:.1}", 0.1 * (i + 1) as f64);
            m_parts.push(format!("{cut}, {m}"));
            d_parts.push(format!("{cut}, {d}"));
        } else {
            m_parts.push(m);
            d_parts.push(d);
        }
    }
    let m = format!("piecewise({})*(1.5 + {SIN})", m_parts.join(", "));
    let dxm = format!("piecewise({})*(1.5 + {SIN})", d_parts.join(", "));
    let mut b = Builder::new("staircase", &m, &dxm, &format!("1 - x + 0.5*x*{SIN}"))
        .labels(&labels)
        .expect(ExpectedKind::SpatialFormula);
    for i in 1..10 {
        b = b.curve(&format!("{:.1}", 0.1 * i as f64), None);
    }
    b.build()
}

/// Drift `-30 (x - k1)(x - k2)(x - k3)`: maxima at `k1` and `k3`, minimum at `k2`.
fn two_maxima() -> Scenario {
    let (k1, r1) = wobble(0.2, false);
    let k2 = "0.5";
    let (k3, r3) = wobble(0.8, true);
    let e1 = format!("({k1} + {k2} + {k3})");
    let e2 = format!("({k1}*{k2} + {k1}*{k3} + {k2}*{k3})");
    let e3 = format!("({k1}*{k2}*{k3})");
    let m = format!("-30*(x^4/4 - {e1}*x^3/3 + {e2}*x^2/2 - {e3}*x)");
    let dxm = format!("-30*(x - {k1})*(x - {k2})*(x - {k3})");
    Builder::new("two-maxima", &m, &dxm, &format!("x + 0.3*{SIN}"))
        .curve(&k1, Some(&r1))
        .curve(&k3, Some(&r3))
        .expect(ExpectedKind::CurveAverageMin)
        .build()
}

/// Every built-in scenario.
pub fn builtin_catalog() -> Vec<Scenario> {
    use IntervalLabel::*;
    let drift = format!("2 + {SIN}");
    let mut out = vec![
        Builder::new("constant-potential", "x", "1", "0.7")
            .curve("1", None)
            .expect(ExpectedKind::CurveAverageMin)
            .build(),
        Builder::new(
            "time-only-potential",
            &format!("x*({drift})"),
            &drift,
            &format!("1 + {SIN}"),
        )
        .curve("1", None)
        .expect(ExpectedKind::CurveAverageMin)
        .build(),
        Builder::new(
            "monotone-increasing",
            &format!("x*({drift})"),
            &drift,
            &format!("cos(pi*x) + 0.5*{SIN}"),
        )
        .curve("1", None)
        .expect(ExpectedKind::CurveAverageMin)
        .build(),
        Builder::new(
            "monotone-decreasing",
            &format!("-x*(1.5 + {COS})"),
            &format!("-(1.5 + {COS})"),
            &format!("x^2 + x*{SIN}"),
        )
        .curve("0", None)
        .expect(ExpectedKind::CurveAverageMin)
        .build(),
        Builder::new(
            "moving-maximum",
            &format!("-4*(x - 0.5 - 0.2*{SIN})^2"),
            &format!("-8*(x - 0.5 - 0.2*{SIN})"),
            &format!("cos(2*pi*x) + x*{SIN}"),
        )
        .curve(&format!("0.5 + 0.2*{SIN}"), Some(&format!("0.4*pi*{COS}")))
        .expect(ExpectedKind::CurveAverageMin)
        .build(),
        two_maxima(),
        Builder::new(
            "boundary-maxima",
            &format!("2*(x - 0.5 - 0.1*{SIN})^2"),
            &format!("4*(x - 0.5 - 0.1*{SIN})"),
            &format!("0.5 - x + 0.2*{SIN}"),
        )
        .curve("0", None)
        .curve("1", None)
        .expect(ExpectedKind::CurveAverageMin)
        .build(),
        plateau_scenario(
            "plateau-inflow",
            Some((0.3, false)),
            Some((0.65, true)),
            1.0,
            -1.0,
            &format!("0.5*cos(2*pi*x) + 0.3*{SIN}"),
            &[Pos, Zero, Neg],
        ),
        plateau_scenario(
            "plateau-outflow",
            Some((0.3, false)),
            Some((0.65, true)),
            -1.0,
            1.0,
            &format!("1 - x + 0.2*{SIN}"),
            &[Neg, Zero, Pos],
        ),
        plateau_scenario(
            "plateau-outflow-left-end",
            None,
            Some((0.5, false)),
            0.0,
            1.0,
            &format!("1 - x + 0.2*{SIN}"),
            &[Zero, Pos],
        ),
        plateau_scenario(
            "plateau-outflow-right-end",
            Some((0.5, false)),
            None,
            -1.0,
            0.0,
            &format!("x + 0.2*{SIN}"),
            &[Neg, Zero],
        ),
        plateau_scenario(
            "plateau-through-right",
            Some((0.3, false)),
            Some((0.65, true)),
            1.0,
            1.0,
            &format!("1 - x + 0.2*{SIN}"),
            &[Pos, Zero, Pos],
        ),
        plateau_scenario(
            "plateau-inflow-right-end",
            Some((0.4, false)),
            None,
            1.0,
            0.0,
            &format!("0.5*cos(2*pi*x) + 0.3*{SIN}"),
            &[Pos, Zero],
        ),
        plateau_scenario(
            "plateau-through-left",
            Some((0.3, false)),
            Some((0.65, true)),
            -1.0,
            -1.0,
            &format!("x + 0.2*{SIN}"),
            &[Neg, Zero, Neg],
        ),
        plateau_scenario(
            "plateau-inflow-left-end",
            None,
            Some((0.6, true)),
            0.0,
            -1.0,
            &format!("0.5*cos(2*pi*x) + 0.3*{SIN}"),
            &[Zero, Neg],
        ),
        staircase(),
    ];

    // Thin static plateau around 0.25.
    let (m, dxm) = plateau(Some("0.2"), Some("0.3"), 1.0, -1.0);
    out.push(
        Builder::new("thin-plateau", &m, &dxm, "cos(2*pi*x)")
            .curve("0.2", None)
            .curve("0.3", None)
            .labels(&[Pos, Zero, Neg])
            .expect(ExpectedKind::SpatialFormula)
            .build(),
    );

    out.push(
        Builder::temporal(
            "switch-on-drift",
            &format!("max(0, -{SIN})"),
            &format!("(x - 0.3)^2 + 0.5*{COS}"),
        )
        .hint(&[0.5])
        .build(),
    );
    out.push(Builder::temporal("reversing-drift", SIN, "x").build());
    out.push(Builder::temporal("touching-drift", &format!("1 + {COS}"), &format!("x^2 + {SIN}")).build());

    let on = format!("max(0, {SIN})");
    out.push(
        Builder::new(
            "tent-collapse",
            &format!("-{on}*10*(x - 0.4)^2"),
            &format!("-{on}*20*(x - 0.4)"),
            &format!("cos(pi*x) + 0.5*{SIN}"),
        )
        .curve("0.4", None)
        .hint(&[0.5])
        .expect(ExpectedKind::MixedProblem)
        .build(),
    );
    let (m, dxm) = plateau(Some("0.3"), Some("0.6"), 1.0, -1.0);
    out.push(
        Builder::new(
            "plateau-switch",
            &format!("{on}*({m})"),
            &format!("{on}*({dxm})"),
            &format!("cos(2*pi*x) + 0.5*{COS}"),
        )
        .curve("0.3", None)
        .curve("0.6", None)
        .hint(&[0.5])
        .expect(ExpectedKind::MixedProblem)
        .build(),
    );
    out
}

/// Looks up a built-in scenario by name.
pub fn catalog_scenario(name: &str) -> Option<Scenario> {
    builtin_catalog().into_iter().find(|s| s.name == name)
}
