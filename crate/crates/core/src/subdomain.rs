//! Principal eigenvalues on time-varying intervals `(lower(t), upper(t))`,
//! computed on the unit interval after the change of variables
//! `y = (x - lower(t)) / w(t)`.

use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discretize::{BoundaryKind, BoundaryPair, ParabolicProblem, RobinForm, SpaceTimeGrid};
use crate::error::{Error, Result};
use crate::floquet::{fmt_num, monodromy_for_problem, principal_eigenvalue_with, EigenResult, PowerOptions};
use crate::scenario::{Coefficients, Curve};

pub const MIN_WIDTH: f64 = 1e-4;
const PROBE_TIMES: usize = 65;
const RATE_STEP: f64 = 1e-5;
const RATE_TOL: f64 = 1e-6;

/// Boundary type at one end of a subdomain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EndType {
    N,
    D,
}

impl EndType {
    pub fn kind(self) -> BoundaryKind {
        match self {
            EndType::N => BoundaryKind::Neumann,
            EndType::D => BoundaryKind::Dirichlet,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MovingInterval {
    pub lower: Curve,
    pub upper: Curve,
}

impl MovingInterval {
    pub fn new(lower: Curve, upper: Curve) -> Self {
        MovingInterval { lower, upper }
    }

    pub fn fixed(lower: f64, upper: f64) -> Self {
        Self::new(Curve::constant(lower), Curve::constant(upper))
    }

    /// `(center - delta, center + delta)`.
    pub fn strip(center: &Curve, delta: f64) -> Result<Self> {
        let shift = |c: &Curve, s: f64| -> Result<Curve> {
            Curve::new(
                &format!("({}) + ({s:?})", c.position.source()),
                c.rate.source(),
            )
        };
        Ok(Self::new(shift(center, -delta)?, shift(center, delta)?))
    }

    pub fn width(&self, t: f64) -> f64 {
        self.upper.at(t) - self.lower.at(t)
    }

    /// Checks ordering, minimum width and the supplied rates on probe times.
    pub fn validate(&self, period: f64) -> Result<()> {
        for k in 0..PROBE_TIMES {
            let t = k as f64 * period / (PROBE_TIMES - 1) as f64;
            let w = self.width(t);
            if !(w >= MIN_WIDTH) {
                return Err(Error::DegenerateWidth { t, width: w });
            }
            for c in [&self.lower, &self.upper] {
                let fd = (c.at(t + RATE_STEP) - c.at(t - RATE_STEP)) / (2.0 * RATE_STEP);
                if (fd - c.rate_at(t)).abs() > RATE_TOL {
                    return Err(Error::validation_at(
                        format!("rate of '{}' is not its derivative", c.position),
                        None,
                        Some(t),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// The problem on `y in (0, 1)` equivalent to `problem` on the moving interval.
///
/// With `x = lower + y w`, `psi(y, t) = phi(x, t)` solves the same kind of
/// equation with diffusion `D / w^2`, drift `(lower' + y w') / w + a(x, t) / w`
/// and potential `V(x, t)`; Robin parameters scale by `w`.
pub fn transform_problem(interval: &MovingInterval, problem: &ParabolicProblem, period: f64) -> Result<ParabolicProblem> {
    interval.validate(period)?;
    let lo = interval.lower.clone();
    let hi = interval.upper.clone();
    let width = {
        let (lo, hi) = (lo.clone(), hi.clone());
        move |t: f64| hi.at(t) - lo.at(t)
    };
    let diffusion = {
        let d = problem.diffusion.clone();
        let width = width.clone();
        Arc::new(move |t: f64| {
            let w = width(t);
            d(t) / (w * w)
        })
    };
    let drift = {
        let a = problem.drift.clone();
        let (lo, hi) = (lo.clone(), hi.clone());
        Arc::new(move |y: f64, t: f64| {
            let l = lo.at(t);
            let w = hi.at(t) - l;
            let dl = lo.rate_at(t);
            let dw = hi.rate_at(t) - dl;
            (dl + y * dw) / w + a(l + y * w, t) / w
        })
    };
    let potential = {
        let v = problem.potential.clone();
        let lo = lo.clone();
        let width = width.clone();
        Arc::new(move |y: f64, t: f64| v(lo.at(t) + y * width(t), t))
    };
    let robin_scale = {
        let inner = problem.robin_scale.clone();
        Arc::new(move |t: f64| width(t) * inner.as_ref().map_or(1.0, |s| s(t)))
    };
    Ok(ParabolicProblem {
        period,
        diffusion,
        drift,
        potential,
        robin_scale: Some(robin_scale),
    })
}

/// The drift-free problem of `coefficients` mapped onto the unit interval.
pub fn transform_to_fixed_domain(interval: &MovingInterval, coefficients: &Coefficients) -> Result<ParabolicProblem> {
    let problem = ParabolicProblem::from_coefficients(coefficients, 0.0);
    transform_problem(interval, &problem, coefficients.period)
}

fn solve_on_unit(problem: &ParabolicProblem, grid: &SpaceTimeGrid, boundary: BoundaryPair) -> Result<EigenResult> {
    if grid.lower != 0.0 || grid.upper != 1.0 {
        return Err(Error::validation("subdomain solves use a grid on [0, 1]"));
    }
    let m = monodromy_for_problem(problem, grid, boundary, 1.0)?;
    principal_eigenvalue_with(&m, &PowerOptions::default())
}

/// `lambda^{pq}` of the drift-free problem on the moving interval.
pub fn subdomain_eigenvalue(
    coefficients: &Coefficients,
    interval: &MovingInterval,
    p: EndType,
    q: EndType,
    grid: &SpaceTimeGrid,
) -> Result<EigenResult> {
    let problem = transform_to_fixed_domain(interval, coefficients)?;
    solve_on_unit(&problem, grid, BoundaryPair::new(p.kind(), q.kind()))
}

/// Robin eigenvalue with `psi' = eta psi` at the lower end and `psi' = -eta psi`
/// at the upper end (or the Dirichlet form `psi = eta psi'`, `psi = -eta psi'`).
pub fn robin_eigenvalue(
    coefficients: &Coefficients,
    interval: &MovingInterval,
    eta: f64,
    form: RobinForm,
    grid: &SpaceTimeGrid,
) -> Result<EigenResult> {
    if !eta.is_finite() {
        return Err(Error::validation("Robin parameter must be finite"));
    }
    let problem = transform_to_fixed_domain(interval, coefficients)?;
    solve_on_unit(&problem, grid, BoundaryPair::robin(eta, form))
}

/// A two-column table `parameter,lambda`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanTable {
    pub parameter: String,
    pub rows: Vec<(f64, f64)>,
}

impl ScanTable {
    pub fn to_csv(&self) -> String {
        let mut out = format!("{},lambda\n", self.parameter);
        for (p, l) in &self.rows {
            out.push_str(&format!("{},{}\n", fmt_num(*p), fmt_num(*l)));
        }
        out
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }
}

/// `lambda^{NN}((kappa - delta, kappa + delta))` for each `delta`.
pub fn shrinking_strip_limit(
    coefficients: &Coefficients,
    center: &Curve,
    deltas: &[f64],
    grid: &SpaceTimeGrid,
) -> Result<ScanTable> {
    let period = coefficients.period;
    for &d in deltas {
        if !(2.0 * d >= MIN_WIDTH) {
            return Err(Error::DegenerateWidth { t: 0.0, width: 2.0 * d });
        }
        for k in 0..PROBE_TIMES {
            let t = k as f64 * period / (PROBE_TIMES - 1) as f64;
            let c = center.at(t);
            if c - d < 0.0 || c + d > 1.0 {
                return Err(Error::validation_at(
                    format!("strip of half-width {d} leaves [0, 1]"),
                    Some(c),
                    Some(t),
                ));
            }
        }
    }
    let rows = deltas
        .par_iter()
        .map(|&d| {
            let interval = MovingInterval::strip(center, d)?;
            let r = subdomain_eigenvalue(coefficients, &interval, EndType::N, EndType::N, grid)?;
            Ok((d, r.lambda))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScanTable {
        parameter: "delta".into(),
        rows,
    })
}

/// Robin eigenvalues over a list of parameters.
pub fn robin_scan(
    coefficients: &Coefficients,
    interval: &MovingInterval,
    etas: &[f64],
    form: RobinForm,
    grid: &SpaceTimeGrid,
) -> Result<ScanTable> {
    let rows = etas
        .par_iter()
        .map(|&eta| Ok((eta, robin_eigenvalue(coefficients, interval, eta, form, grid)?.lambda)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ScanTable {
        parameter: "eta".into(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;
    use std::f64::consts::PI;

    fn coefficients(v: &str) -> Coefficients {
        Coefficients {
            period: 1.0,
            diffusion: 1.0,
            m: Expr::constant(0.0),
            dxm: Expr::constant(0.0),
            potential: Expr::parse(v).unwrap(),
            drift_b: None,
        }
    }

    #[test]
    fn unit_interval_transform_is_identity() {
        let c = coefficients("x*sin(2*pi*t)");
        let p = transform_to_fixed_domain(&MovingInterval::fixed(0.0, 1.0), &c).unwrap();
        for (y, t) in [(0.1, 0.2), (0.7, 0.9)] {
            assert_eq!((p.diffusion)(t), 1.0);
            assert_eq!((p.drift)(y, t), 0.0);
            assert_eq!((p.potential)(y, t), c.potential.eval(y, t));
        }
    }

    #[test]
    fn static_interval_scales_diffusion() {
        let c = coefficients("0");
        let p = transform_to_fixed_domain(&MovingInterval::fixed(0.2, 0.7), &c).unwrap();
        assert!(((p.diffusion)(0.3) - 4.0).abs() < 1e-14);
        assert_eq!((p.drift)(0.5, 0.3), 0.0);
    }

    #[test]
    fn rigid_translation_drift_is_uniform() {
        let c = coefficients("0");
        let lower = Curve::new("0.2 + 0.1*sin(2*pi*t)", "0.2*pi*cos(2*pi*t)").unwrap();
        let upper = Curve::new("0.7 + 0.1*sin(2*pi*t)", "0.2*pi*cos(2*pi*t)").unwrap();
        let p = transform_to_fixed_domain(&MovingInterval::new(lower, upper), &c).unwrap();
        for t in [0.0, 0.3, 0.8] {
            let expected = 0.2 * PI * (2.0 * PI * t).cos() / 0.5;
            for y in [0.0, 0.5, 1.0] {
                assert!(((p.drift)(y, t) - expected).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn degenerate_width_and_bad_rate() {
        let c = coefficients("0");
        let i = MovingInterval::fixed(0.5, 0.50005);
        assert!(matches!(
            transform_to_fixed_domain(&i, &c),
            Err(Error::DegenerateWidth { .. })
        ));
        let lower = Curve::new("0.2 + 0.1*sin(2*pi*t)", "0").unwrap();
        let i = MovingInterval::new(lower, Curve::constant(0.9));
        assert!(matches!(transform_to_fixed_domain(&i, &c), Err(Error::Validation { .. })));
    }

    #[test]
    fn neumann_zero_potential_gives_zero() {
        let c = coefficients("0");
        let g = SpaceTimeGrid::new(41, 20, 1.0).unwrap();
        let r = subdomain_eigenvalue(&c, &MovingInterval::fixed(0.3, 0.8), EndType::N, EndType::N, &g).unwrap();
        assert!(r.lambda.abs() < 1e-10);
    }
}
