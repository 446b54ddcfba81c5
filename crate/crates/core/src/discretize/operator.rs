use super::{BoundaryPair, EndCondition, ParabolicProblem, SpaceTimeGrid, Tridiagonal};
use crate::error::{Error, Result};
use crate::scenario::Coefficients;

/// Bernoulli function `z / (exp(z) - 1)`, with `B(0) = 1`.
pub fn bernoulli(z: f64) -> f64 {
    if z.abs() < 1e-3 {
        let z2 = z * z;
        1.0 - 0.5 * z + z2 / 12.0 - z2 * z2 / 720.0
    } else {
        z / z.exp_m1()
    }
}

/// Tridiagonal discretization of `-D u'' - a u' + V u` at one time level.
///
/// The transport part (`sub`, `diag`, `sup`) has vanishing row sums; the
/// potential and any Robin boundary terms are kept separately so that
/// constant shifts of the potential can be removed without rounding.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialOperator {
    pub sub: Vec<f64>,
    pub diag: Vec<f64>,
    pub sup: Vec<f64>,
    pub potential: Vec<f64>,
    pub boundary_reaction: [f64; 2],
    pub pinned: [bool; 2],
}

impl SpatialOperator {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn is_pinned(&self, j: usize) -> bool {
        let n = self.len();
        (j == 0 && self.pinned[0]) || (j + 1 == n && self.pinned[1])
    }

    /// Reaction coefficient of row `j`: potential plus Robin terms.
    pub fn reaction(&self, j: usize) -> f64 {
        if self.is_pinned(j) {
            return 0.0;
        }
        let n = self.len();
        let mut r = self.potential[j];
        if j == 0 {
            r += self.boundary_reaction[0];
        }
        if j + 1 == n && n > 1 {
            r += self.boundary_reaction[1];
        }
        r
    }

    /// Full diagonal of the operator (transport plus reaction).
    pub fn full_diag(&self) -> Vec<f64> {
        (0..self.len()).map(|j| self.diag[j] + self.reaction(j)).collect()
    }

    pub fn to_tridiagonal(&self) -> Tridiagonal {
        Tridiagonal::new(self.sub.clone(), self.full_diag(), self.sup.clone())
    }

    /// `L u`, evaluated in difference form so constants are annihilated exactly
    /// when the reaction vanishes.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let n = self.len();
        assert_eq!(u.len(), n);
        (0..n)
            .map(|j| {
                let mut acc = self.reaction(j) * u[j];
                if j > 0 {
                    acc += self.sub[j] * (u[j - 1] - u[j]);
                }
                if j + 1 < n {
                    acc += self.sup[j] * (u[j + 1] - u[j]);
                }
                acc
            })
            .collect()
    }

    /// Smallest potential value over nodes that are not pinned.
    pub fn potential_floor(&self) -> f64 {
        (0..self.len())
            .filter(|&j| !self.is_pinned(j))
            .map(|j| self.potential[j])
            .fold(f64::INFINITY, f64::min)
    }

    /// `I + c (L - shift)` with pinned rows replaced by identity rows.
    pub(crate) fn shifted_identity_plus(&self, c: f64, shift: f64) -> Tridiagonal {
        let n = self.len();
        let mut sub = vec![0.0; n];
        let mut diag = vec![1.0; n];
        let mut sup = vec![0.0; n];
        for j in 0..n {
            if self.is_pinned(j) {
                continue;
            }
            let mut reaction = self.potential[j] - shift;
            if j == 0 {
                reaction += self.boundary_reaction[0];
            }
            if j + 1 == n && n > 1 {
                reaction += self.boundary_reaction[1];
            }
            sub[j] = c * self.sub[j];
            sup[j] = c * self.sup[j];
            diag[j] = 1.0 + c * (self.diag[j] + reaction);
        }
        Tridiagonal::new(sub, diag, sup)
    }
}

/// Exponentially fitted assembly on explicit node coordinates with spacing `h`.
pub(crate) fn assemble_on(
    problem: &ParabolicProblem,
    xs: &[f64],
    h: f64,
    t: f64,
    boundary: BoundaryPair,
) -> SpatialOperator {
    let n = xs.len();
    let mut sub = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut sup = vec![0.0; n];
    let potential: Vec<f64> = xs.iter().map(|&x| (problem.potential)(x, t)).collect();
    let mut boundary_reaction = [0.0; 2];
    let mut pinned = [false; 2];
    if n < 2 {
        return SpatialOperator {
            sub,
            diag,
            sup,
            potential,
            boundary_reaction,
            pinned,
        };
    }
    let d = (problem.diffusion)(t);
    let k = d / (h * h);
    let fluxes = |x: f64| {
        let z = (problem.drift)(x, t) * h / d;
        (-k * bernoulli(z), -k * bernoulli(-z))
    };
    for j in 1..n - 1 {
        let (lo, hi) = fluxes(xs[j]);
        sub[j] = lo;
        sup[j] = hi;
        diag[j] = -(lo + hi);
    }
    let scale = problem.robin_factor(t);
    // Boundary rows are half cells: the one interior flux is doubled.
    match boundary.left.end_condition() {
        EndCondition::Pinned => pinned[0] = true,
        EndCondition::Flux(eta) => {
            let (_, hi) = fluxes(xs[0]);
            sup[0] = 2.0 * hi;
            diag[0] = -sup[0];
            if eta != 0.0 {
                boundary_reaction[0] = 2.0 * d * eta * scale / h;
            }
        }
    }
    match boundary.right.end_condition() {
        EndCondition::Pinned => pinned[1] = true,
        EndCondition::Flux(eta) => {
            let (lo, _) = fluxes(xs[n - 1]);
            sub[n - 1] = 2.0 * lo;
            diag[n - 1] = -sub[n - 1];
            if eta != 0.0 {
                boundary_reaction[1] = 2.0 * d * eta * scale / h;
            }
        }
    }
    SpatialOperator {
        sub,
        diag,
        sup,
        potential,
        boundary_reaction,
        pinned,
    }
}

/// Operator of `problem` at time `t` on the nodes of `grid`.
pub fn assemble_problem(
    problem: &ParabolicProblem,
    grid: &SpaceTimeGrid,
    t: f64,
    boundary: BoundaryPair,
) -> SpatialOperator {
    assemble_on(problem, &grid.x_nodes(), grid.dx(), t, boundary)
}

/// Operator for advection `alpha * dxm` at time level `t_index` of `grid`.
pub fn assemble(
    coefficients: &Coefficients,
    grid: &SpaceTimeGrid,
    t_index: usize,
    alpha: f64,
    boundary: BoundaryPair,
) -> SpatialOperator {
    let problem = ParabolicProblem::from_coefficients(coefficients, alpha);
    assemble_problem(&problem, grid, grid.t(t_index), boundary)
}

/// One theta-step: `(I + theta dt L) u' = (I - (1 - theta) dt L_prev) u`.
///
/// Pinned (Dirichlet) nodes are held at zero.
pub fn step(
    u: &[f64],
    operator: &SpatialOperator,
    operator_prev: &SpatialOperator,
    dt: f64,
    theta: f64,
) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::validation(format!("theta must lie in [0, 1], got {theta}")));
    }
    let mut rhs = u.to_vec();
    if theta < 1.0 {
        let lu = operator_prev.apply(u);
        for (r, l) in rhs.iter_mut().zip(&lu) {
            *r -= (1.0 - theta) * dt * l;
        }
    }
    let n = operator.len();
    for j in 0..n {
        if operator.is_pinned(j) {
            rhs[j] = 0.0;
        }
    }
    operator.shifted_identity_plus(theta * dt, 0.0).solve(&rhs)
}
