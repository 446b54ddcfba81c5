//! Grids, boundary data and the exponentially fitted tridiagonal operator
//! for `-D u'' - a u' + V u` on an interval.

mod grid;
mod operator;
mod tridiag;

use std::fmt;
use std::sync::Arc;

pub use grid::SpaceTimeGrid;
pub(crate) use grid::{trapezoid_weights, uniform_times};
pub use operator::{assemble, assemble_problem, bernoulli, step, SpatialOperator};
pub(crate) use operator::assemble_on;
pub use tridiag::{Factored, Tridiagonal};

use crate::scenario::Coefficients;

/// A coefficient depending on space and time.
pub type Field = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
/// A coefficient depending on time only.
pub type Signal = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// How a Robin parameter was specified.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RobinForm {
    /// `u' = eta u` on the left end, `u' = -eta u` on the right end.
    NeumannForm,
    /// `u = eta u'` on the left end, `u = -eta u'` on the right end.
    DirichletForm,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryKind {
    Neumann,
    Dirichlet,
    Robin { eta: f64, form: RobinForm },
}

/// Boundary kinds after converting Robin data to the outward flux form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum EndCondition {
    Flux(f64),
    Pinned,
}

impl BoundaryKind {
    pub fn robin(eta: f64) -> Self {
        BoundaryKind::Robin {
            eta,
            form: RobinForm::NeumannForm,
        }
    }

    pub(crate) fn end_condition(self) -> EndCondition {
        match self {
            BoundaryKind::Neumann => EndCondition::Flux(0.0),
            BoundaryKind::Dirichlet => EndCondition::Pinned,
            BoundaryKind::Robin {
                eta,
                form: RobinForm::NeumannForm,
            } => EndCondition::Flux(eta),
            BoundaryKind::Robin {
                eta,
                form: RobinForm::DirichletForm,
            } => {
                if eta == 0.0 {
                    EndCondition::Pinned
                } else {
                    EndCondition::Flux(1.0 / eta)
                }
            }
        }
    }

    pub fn is_dirichlet(self) -> bool {
        matches!(self.end_condition(), EndCondition::Pinned)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryPair {
    pub left: BoundaryKind,
    pub right: BoundaryKind,
}

impl BoundaryPair {
    pub fn new(left: BoundaryKind, right: BoundaryKind) -> Self {
        BoundaryPair { left, right }
    }

    pub fn neumann() -> Self {
        Self::new(BoundaryKind::Neumann, BoundaryKind::Neumann)
    }

    pub fn dirichlet() -> Self {
        Self::new(BoundaryKind::Dirichlet, BoundaryKind::Dirichlet)
    }

    pub fn robin(eta: f64, form: RobinForm) -> Self {
        let kind = BoundaryKind::Robin { eta, form };
        Self::new(kind, kind)
    }
}

impl Default for BoundaryPair {
    fn default() -> Self {
        Self::neumann()
    }
}

/// The operator `-D(t) u'' - a(x,t) u' + V(x,t) u` on the current coordinates.
///
/// `robin_scale(t)` multiplies Robin parameters; it is the interval width when
/// the problem was mapped from a moving interval onto `[0, 1]`.
#[derive(Clone)]
pub struct ParabolicProblem {
    pub period: f64,
    pub diffusion: Signal,
    pub drift: Field,
    pub potential: Field,
    pub robin_scale: Option<Signal>,
}

impl ParabolicProblem {
    pub fn new(
        period: f64,
        diffusion: f64,
        drift: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        potential: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        ParabolicProblem {
            period,
            diffusion: Arc::new(move |_| diffusion),
            drift: Arc::new(drift),
            potential: Arc::new(potential),
            robin_scale: None,
        }
    }

    /// The problem with advection `alpha * dxm` built from scenario coefficients.
    pub fn from_coefficients(c: &Coefficients, alpha: f64) -> Self {
        let dxm = c.dxm.clone();
        let v = c.potential.clone();
        let drift: Field = if alpha == 0.0 {
            Arc::new(|_, _| 0.0)
        } else {
            Arc::new(move |x, t| alpha * dxm.eval(x, t))
        };
        let d = c.diffusion;
        ParabolicProblem {
            period: c.period,
            diffusion: Arc::new(move |_| d),
            drift,
            potential: Arc::new(move |x, t| v.eval(x, t)),
            robin_scale: None,
        }
    }

    pub fn with_potential(
        &self,
        potential: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        ParabolicProblem {
            potential: Arc::new(potential),
            ..self.clone()
        }
    }

    pub fn without_drift(&self) -> Self {
        ParabolicProblem {
            drift: Arc::new(|_, _| 0.0),
            ..self.clone()
        }
    }

    pub(crate) fn robin_factor(&self, t: f64) -> f64 {
        self.robin_scale.as_ref().map_or(1.0, |s| s(t))
    }
}

impl fmt::Debug for ParabolicProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ParabolicProblem")
            .field("period", &self.period)
            .field("robin_scale", &self.robin_scale.is_some())
            .finish_non_exhaustive()
    }
}
