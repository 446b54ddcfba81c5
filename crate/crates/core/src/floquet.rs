//! Period maps of time-periodic parabolic problems and their principal
//! eigenvalue by power iteration, `lambda = -ln(r) / T`.

use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discretize::{
    assemble_on, trapezoid_weights, BoundaryPair, Factored, ParabolicProblem, SpaceTimeGrid,
    SpatialOperator, Tridiagonal,
};
use crate::error::{Error, Result};
use crate::scenario::Scenario;
use crate::temporal::ResetKind;

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 100_000;
const STAGNATION_WINDOW: usize = 2000;
const MAX_RESTARTS: usize = 3;

/// One implicit (theta) time step acting on the window `lo .. lo + len`.
#[derive(Debug, Clone)]
pub struct SolveStep {
    implicit: Factored,
    implicit_matrix: Tridiagonal,
    explicit: Option<Tridiagonal>,
    lo: usize,
    pinned: [bool; 2],
    log_gain: f64,
    dt: f64,
    t_end: f64,
}

impl SolveStep {
    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn window(&self) -> (usize, usize) {
        (self.lo, self.lo + self.implicit_matrix.len())
    }

    fn len(&self) -> usize {
        self.implicit_matrix.len()
    }

    fn zero_pinned(&self, u: &mut [f64]) {
        let n = u.len();
        if self.pinned[0] {
            u[0] = 0.0;
        }
        if self.pinned[1] && n > 0 {
            u[n - 1] = 0.0;
        }
    }

    fn apply(&self, u: &mut [f64]) {
        let w = &mut u[self.lo..self.lo + self.len()];
        if let Some(b) = &self.explicit {
            let rhs = b.mul_vec(w);
            w.copy_from_slice(&rhs);
        }
        self.zero_pinned(w);
        self.implicit.solve_in_place(w);
    }

    fn apply_adjoint(&self, u: &mut [f64]) -> Result<()> {
        let lo = self.lo;
        let w = &mut u[lo..lo + self.len()];
        let at = self.implicit_matrix.transpose().factor()?;
        at.solve_in_place(w);
        self.zero_pinned(w);
        if let Some(b) = &self.explicit {
            let out = b.transpose().mul_vec(w);
            w.copy_from_slice(&out);
        }
        Ok(())
    }
}

/// One action of a period map.
#[derive(Debug, Clone)]
pub enum PeriodStep {
    Solve(Box<SolveStep>),
    Reset(ResetKind),
    /// Multiplication by `exp(log_gain)` while time advances by `dt`.
    Decay { dt: f64, t_end: f64, log_gain: f64 },
}

impl PeriodStep {
    pub fn dt(&self) -> f64 {
        match self {
            PeriodStep::Solve(s) => s.dt,
            PeriodStep::Reset(_) => 0.0,
            PeriodStep::Decay { dt, .. } => *dt,
        }
    }

    fn t_end(&self) -> Option<f64> {
        match self {
            PeriodStep::Solve(s) => Some(s.t_end),
            PeriodStep::Reset(_) => None,
            PeriodStep::Decay { t_end, .. } => Some(*t_end),
        }
    }

    fn shift_time(&mut self, by: f64) {
        match self {
            PeriodStep::Solve(s) => s.t_end += by,
            PeriodStep::Reset(_) => {}
            PeriodStep::Decay { t_end, .. } => *t_end += by,
        }
    }

    /// Applies the step in place and returns the log of the scalar gain.
    fn apply(&self, u: &mut [f64]) -> f64 {
        match self {
            PeriodStep::Solve(s) => {
                s.apply(u);
                s.log_gain
            }
            PeriodStep::Reset(r) => {
                r.apply(u);
                0.0
            }
            PeriodStep::Decay { log_gain, .. } => *log_gain,
        }
    }

    fn apply_adjoint(&self, u: &mut [f64]) -> Result<f64> {
        Ok(match self {
            PeriodStep::Solve(s) => {
                s.apply_adjoint(u)?;
                s.log_gain
            }
            PeriodStep::Reset(r) => {
                r.apply_adjoint(u);
                0.0
            }
            PeriodStep::Decay { log_gain, .. } => *log_gain,
        })
    }
}

/// Builds theta-scheme steps over consecutive `times` on the nodes `xs`.
///
/// The potential is split as `V = (V - Vmin(t)) + Vmin(t)`: the first part
/// enters the tridiagonal solves, the second is integrated exactly by Simpson's
/// rule into a scalar gain. Constant or time-only potentials are therefore
/// reproduced without time-discretization error.
pub(crate) fn pde_steps(
    problem: &ParabolicProblem,
    xs: &[f64],
    h: f64,
    boundary: BoundaryPair,
    times: &[f64],
    theta: f64,
    window_offset: usize,
) -> Result<Vec<PeriodStep>> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::validation(format!("theta must lie in [0, 1], got {theta}")));
    }
    let floor_at = |t: f64| -> f64 {
        let op = assemble_on(problem, xs, h, t, boundary);
        op.potential_floor()
    };
    let mut steps = Vec::with_capacity(times.len().saturating_sub(1));
    let mut prev: Option<(SpatialOperator, f64)> = None;
    for pair in times.windows(2) {
        let (t0, t1) = (pair[0], pair[1]);
        let dt = t1 - t0;
        let op1 = assemble_on(problem, xs, h, t1, boundary);
        let floor1 = op1.potential_floor();
        let (op0, floor0) = match prev.take() {
            Some(p) => p,
            None => {
                let op = assemble_on(problem, xs, h, t0, boundary);
                let f = op.potential_floor();
                (op, f)
            }
        };
        let floor_mid = floor_at(0.5 * (t0 + t1));
        let implicit_matrix = op1.shifted_identity_plus(theta * dt, floor1);
        let implicit = implicit_matrix.factor()?;
        let explicit = if theta < 1.0 {
            let mut b = op0.shifted_identity_plus(-(1.0 - theta) * dt, floor0);
            let n = b.len();
            for j in [0, n - 1] {
                if op0.is_pinned(j) {
                    b.sub[j] = 0.0;
                    b.diag[j] = 0.0;
                    b.sup[j] = 0.0;
                }
            }
            Some(b)
        } else {
            None
        };
        let log_gain = if floor0.is_finite() {
            -(dt / 6.0) * (floor0 + 4.0 * floor_mid + floor1)
        } else {
            0.0
        };
        steps.push(PeriodStep::Solve(Box::new(SolveStep {
            implicit,
            implicit_matrix,
            explicit,
            lo: window_offset,
            pinned: op1.pinned,
            log_gain,
            dt,
            t_end: t1,
        })));
        prev = Some((op1, floor1));
    }
    Ok(steps)
}

/// The one-period evolution map as an ordered list of steps.
#[derive(Debug, Clone)]
pub struct MonodromyOperator {
    pub steps: Vec<PeriodStep>,
    pub grid: SpaceTimeGrid,
    pub record_trajectory: bool,
    start_time: f64,
}

impl MonodromyOperator {
    pub fn new(steps: Vec<PeriodStep>, grid: SpaceTimeGrid) -> Self {
        MonodromyOperator {
            steps,
            grid,
            record_trajectory: true,
            start_time: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.grid.nx
    }

    pub fn start_time(&self) -> f64 {
        self.start_time
    }

    /// Time advanced by one application.
    pub fn total_time(&self) -> f64 {
        self.steps
            .iter()
            .rev()
            .find_map(|s| s.t_end())
            .map_or(0.0, |t| t - self.start_time)
    }

    /// Snapshot times: the start plus the end of every time-advancing step.
    pub fn snapshot_times(&self) -> Vec<f64> {
        std::iter::once(self.start_time)
            .chain(self.steps.iter().filter_map(|s| s.t_end()))
            .collect()
    }

    /// The same map started `k` steps later in the period.
    pub fn rotated(&self, k: usize) -> Self {
        let n = self.steps.len();
        if n == 0 {
            return self.clone();
        }
        let k = k % n;
        let period = self.total_time();
        let mut steps = Vec::with_capacity(n);
        steps.extend(self.steps[k..].iter().cloned());
        for s in &self.steps[..k] {
            let mut s = s.clone();
            s.shift_time(period);
            steps.push(s);
        }
        let start_time = self.steps[..k]
            .iter()
            .rev()
            .find_map(|s| s.t_end())
            .unwrap_or(self.start_time);
        MonodromyOperator {
            steps,
            grid: self.grid,
            record_trajectory: self.record_trajectory,
            start_time,
        }
    }

    /// `M u` as `exp(log_scale) * w` with `w` sup-normalized.
    pub fn apply_log(&self, u: &[f64]) -> Result<(Vec<f64>, f64)> {
        let mut w = u.to_vec();
        let mut log_scale = 0.0;
        for s in &self.steps {
            log_scale += s.apply(&mut w);
            log_scale += renormalize(&mut w)?;
        }
        Ok((w, log_scale))
    }

    pub fn apply(&self, u: &[f64]) -> Result<Vec<f64>> {
        let (mut w, s) = self.apply_log(u)?;
        let f = s.exp();
        w.iter_mut().for_each(|v| *v *= f);
        Ok(w)
    }

    /// `M^T u`, the transpose of the period map in the Euclidean inner product.
    pub fn apply_adjoint(&self, u: &[f64]) -> Result<Vec<f64>> {
        let mut w = u.to_vec();
        let mut log_scale = 0.0;
        for s in self.steps.iter().rev() {
            log_scale += s.apply_adjoint(&mut w)?;
            log_scale += renormalize(&mut w)?;
        }
        let f = log_scale.exp();
        w.iter_mut().for_each(|v| *v *= f);
        Ok(w)
    }

    /// Applies the map once and records sup-normalized slices with their log scales.
    fn trajectory(&self, u: &[f64]) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
        let mut w = u.to_vec();
        let mut log_scale = 0.0;
        let mut slices = vec![w.clone()];
        let mut logs = vec![0.0];
        for s in &self.steps {
            log_scale += s.apply(&mut w);
            log_scale += renormalize(&mut w)?;
            if s.t_end().is_some() {
                slices.push(w.clone());
                logs.push(log_scale);
            }
        }
        // Trailing resets belong to the final time level.
        if let Some(last) = slices.last_mut() {
            last.copy_from_slice(&w);
            *logs.last_mut().unwrap() = log_scale;
        }
        Ok((slices, logs))
    }
}

fn renormalize(w: &mut [f64]) -> Result<f64> {
    let norm = w.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::HypothesisViolation(format!(
            "period map produced a {} iterate",
            if norm == 0.0 { "zero" } else { "non-finite" }
        )));
    }
    if norm != 1.0 {
        w.iter_mut().for_each(|v| *v /= norm);
    }
    Ok(norm.ln())
}

/// Period map of `problem` on the nodes of `grid`.
pub fn monodromy_for_problem(
    problem: &ParabolicProblem,
    grid: &SpaceTimeGrid,
    boundary: BoundaryPair,
    theta: f64,
) -> Result<MonodromyOperator> {
    let times = grid.t_nodes();
    let steps = pde_steps(problem, &grid.x_nodes(), grid.dx(), boundary, &times, theta, 0)?;
    Ok(MonodromyOperator::new(steps, *grid))
}

/// Implicit-Euler period map of the scenario with advection `alpha * dxm`.
pub fn build_monodromy(
    scenario: &Scenario,
    grid: &SpaceTimeGrid,
    alpha: f64,
) -> Result<MonodromyOperator> {
    build_monodromy_theta(scenario, grid, alpha, 1.0)
}

pub fn build_monodromy_theta(
    scenario: &Scenario,
    grid: &SpaceTimeGrid,
    alpha: f64,
    theta: f64,
) -> Result<MonodromyOperator> {
    let problem = ParabolicProblem::from_coefficients(&scenario.coefficients, alpha);
    monodromy_for_problem(&problem, grid, scenario.boundary, theta)
}

/// Principal eigenpair of a period map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenResult {
    pub lambda: f64,
    /// Eigenfunction slices over one period, sup-normalized at the first time.
    pub eigenfunction: Vec<Vec<f64>>,
    pub times: Vec<f64>,
    pub x: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub restarts: usize,
}

impl EigenResult {
    /// Eigenfunction at the start of the period.
    pub fn profile(&self) -> &[f64] {
        &self.eigenfunction[0]
    }

    /// Writes the trajectory as CSV rows `t,x,value`.
    pub fn write_trajectory_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Io {
            path: "<trajectory>".into(),
            message: e.to_string(),
        };
        w.write_record(["t", "x", "value"]).map_err(io)?;
        for (t, slice) in self.times.iter().zip(&self.eigenfunction) {
            for (x, v) in self.x.iter().zip(slice) {
                w.write_record([fmt_num(*t), fmt_num(*x), fmt_num(*v)])
                    .map_err(io)?;
            }
        }
        w.flush().map_err(|e| Error::Io {
            path: "<trajectory>".into(),
            message: e.to_string(),
        })
    }

    pub fn save_trajectory_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        self.write_trajectory_csv(file)
    }
}

/// Fixed float formatting used by every table writer: 17 significant digits.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Seed for restart vectors.
    pub seed: u64,
    /// Initial vector; all ones when absent.
    pub start: Option<Vec<f64>>,
}

impl Default for PowerOptions {
    fn default() -> Self {
        PowerOptions {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            seed: 0,
            start: None,
        }
    }
}

pub fn principal_eigenvalue(
    m: &MonodromyOperator,
    tol: f64,
    max_iter: usize,
) -> Result<EigenResult> {
    principal_eigenvalue_with(
        m,
        &PowerOptions {
            tol,
            max_iter,
            ..PowerOptions::default()
        },
    )
}

pub fn random_positive_vector(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(0.1..1.0)).collect()
}

pub fn principal_eigenvalue_with(m: &MonodromyOperator, opts: &PowerOptions) -> Result<EigenResult> {
    if !(opts.tol > 0.0) {
        return Err(Error::validation("tolerance must be positive"));
    }
    let n = m.dim();
    let period = m.total_time();
    if !(period > 0.0) {
        return Err(Error::validation("period map does not advance time"));
    }
    let weights = trapezoid_weights(n);
    let weighted = |v: &[f64]| -> f64 { v.iter().zip(&weights).map(|(a, w)| a * w).sum() };

    let mut v = match &opts.start {
        Some(s) if s.len() == n => s.clone(),
        Some(s) => {
            return Err(Error::validation(format!(
                "start vector has length {}, expected {n}",
                s.len()
            )))
        }
        None => vec![1.0; n],
    };
    renormalize(&mut v)?;

    let mut log_r = f64::NAN;
    let mut residual = f64::INFINITY;
    let mut restarts = 0;
    let mut checkpoint = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        iterations += 1;
        let (w, s) = m.apply_log(&v)?;
        let sw = weighted(&w);
        let sv = weighted(&v);
        if !(sw > 0.0 && sv > 0.0) {
            return Err(Error::HypothesisViolation(
                "period map lost positivity".to_string(),
            ));
        }
        let new_log_r = s + sw.ln() - sv.ln();
        let f = (s - new_log_r).exp();
        residual = w
            .iter()
            .zip(&v)
            .fold(0.0_f64, |acc, (a, b)| acc.max((a * f - b).abs()));
        let change = (new_log_r - log_r).abs();
        log_r = new_log_r;
        v = w;
        if residual < opts.tol && change < opts.tol {
            converged = true;
            break;
        }
        if iterations % STAGNATION_WINDOW == 0 {
            if residual > 0.5 * checkpoint && restarts < MAX_RESTARTS {
                restarts += 1;
                v = random_positive_vector(n, opts.seed.wrapping_add(restarts as u64));
                renormalize(&mut v)?;
                log_r = f64::NAN;
                checkpoint = f64::INFINITY;
                continue;
            }
            checkpoint = residual;
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            max_iter: opts.max_iter,
            last_residual: residual,
        });
    }
    let lambda = -log_r / period;
    let (mut slices, logs) = m.trajectory(&v)?;
    let times = m.snapshot_times();
    for ((slice, l), t) in slices.iter_mut().zip(&logs).zip(&times) {
        let f = (lambda * (t - m.start_time()) + l).exp();
        slice.iter_mut().for_each(|u| *u *= f);
    }
    Ok(EigenResult {
        lambda,
        eigenfunction: slices,
        times,
        x: m.grid.x_nodes(),
        residual,
        iterations,
        restarts,
    })
}

/// How sweep grids grow with `alpha`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPolicy {
    pub nx0: usize,
    pub nt0: usize,
    pub nx_per_alpha: f64,
    pub nt_per_alpha: f64,
    pub theta: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Seed for restart vectors.
    pub seed: u64,
}

impl Default for GridPolicy {
    fn default() -> Self {
        GridPolicy {
            nx0: 201,
            nt0: 400,
            nx_per_alpha: 4.0,
            nt_per_alpha: 2.0,
            theta: 1.0,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            seed: 0,
        }
    }
}

impl GridPolicy {
    pub fn sizes(&self, alpha: f64) -> (usize, usize) {
        let nx = self.nx0.max((self.nx_per_alpha * alpha).ceil() as usize);
        let nt = self.nt0.max((self.nt_per_alpha * alpha).ceil() as usize);
        (nx, nt)
    }

    pub fn grid(&self, alpha: f64, period: f64) -> Result<SpaceTimeGrid> {
        let (nx, nt) = self.sizes(alpha);
        SpaceTimeGrid::new(nx, nt, period)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub alpha: f64,
    /// NaN when the row failed.
    pub lambda: f64,
    pub residual: f64,
    pub iterations: usize,
    pub nx: usize,
    pub nt: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl SweepRow {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.failed()).count()
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["alpha", "lambda", "residual", "iterations", "nx", "nt"])
            .expect("in-memory csv");
        for r in &self.rows {
            w.write_record([
                fmt_num(r.alpha),
                fmt_num(r.lambda),
                fmt_num(r.residual),
                r.iterations.to_string(),
                r.nx.to_string(),
                r.nt.to_string(),
            ])
            .expect("in-memory csv");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv")).expect("ascii csv")
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }
}

/// Principal eigenvalue for each `alpha`; failures are recorded per row.
pub fn alpha_sweep(scenario: &Scenario, alphas: &[f64], policy: &GridPolicy) -> Result<SweepTable> {
    if alphas.is_empty() {
        return Err(Error::validation("alpha list is empty"));
    }
    if alphas.windows(2).any(|w| w[0] > w[1]) || alphas.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
        return Err(Error::validation("alphas must be finite, nonnegative and ascending"));
    }
    let rows = alphas
        .par_iter()
        .map(|&alpha| {
            let (nx, nt) = policy.sizes(alpha);
            let run = || -> Result<EigenResult> {
                let grid = SpaceTimeGrid::new(nx, nt, scenario.coefficients.period)?;
                let m = build_monodromy_theta(scenario, &grid, alpha, policy.theta)?;
                principal_eigenvalue_with(
                    &m,
                    &PowerOptions {
                        tol: policy.tol,
                        max_iter: policy.max_iter,
                        seed: policy.seed,
                        start: None,
                    },
                )
            };
            match run() {
                Ok(r) => SweepRow {
                    alpha,
                    lambda: r.lambda,
                    residual: r.residual,
                    iterations: r.iterations,
                    nx,
                    nt,
                    error: None,
                },
                Err(e) => SweepRow {
                    alpha,
                    lambda: f64::NAN,
                    residual: match e {
                        Error::NoConvergence { last_residual, .. } => last_residual,
                        _ => f64::NAN,
                    },
                    iterations: 0,
                    nx,
                    nt,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    Ok(SweepTable { rows })
}
