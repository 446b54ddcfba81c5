//! Commands behind the `floquet-advect` binary.

use std::path::Path;

use floquet_advect::{
    alpha_sweep, build_monodromy_theta, builtin_catalog, catalog_scenario, load_scenario, predict,
    predict_mode, principal_eigenvalue_with, Error, GridPolicy, LimitMode, LimitPrediction,
    PowerOptions, Result, Scenario, SpaceTimeGrid, SweepRow, SweepTable,
};
use serde::Serialize;

pub mod exit {
    pub const OK: i32 = 0;
    pub const LOAD: i32 = 1;
    pub const NO_CONVERGENCE: i32 = 2;
    pub const PARTIAL: i32 = 3;
    pub const HYPOTHESIS: i32 = 4;
    /// At least one verification report is not PASS.
    pub const VERIFY: i32 = 5;
}

pub const DEFAULT_ALPHAS: [f64; 4] = [10.0, 30.0, 100.0, 300.0];
pub const DEFAULT_GAP_TOL: f64 = 5e-2;
/// Slack allowed when comparing consecutive gaps, so that solver tolerance on
/// exact cases does not break the trend.
pub const TREND_SLACK: f64 = 1e-8;

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse(_) | Error::Validation { .. } | Error::Io { .. } => exit::LOAD,
        Error::NoConvergence { .. } | Error::SingularSystem { .. } => exit::NO_CONVERGENCE,
        Error::HypothesisViolation(_) | Error::DegenerateWidth { .. } | Error::AmbiguousSign { .. } => {
            exit::HYPOTHESIS
        }
    }
}

/// Resolves `catalog:NAME` or a path to a scenario file.
pub fn resolve_scenario(arg: &str) -> Result<Scenario> {
    match arg.strip_prefix("catalog:") {
        Some(name) => catalog_scenario(name).ok_or_else(|| {
            let names: Vec<String> = builtin_catalog().into_iter().map(|s| s.name).collect();
            Error::validation(format!(
                "unknown catalog scenario '{name}'; available: {}",
                names.join(", ")
            ))
        }),
        None => load_scenario(arg),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveOutput {
    pub scenario: String,
    pub alpha: f64,
    pub nx: usize,
    pub nt: usize,
    pub lambda: f64,
    pub residual: f64,
    pub iterations: usize,
    pub restarts: usize,
}

pub struct SolveOptions {
    pub alpha: f64,
    pub nx: usize,
    pub nt: usize,
    pub theta: f64,
    pub power: PowerOptions,
}

pub fn cmd_solve(scenario: &Scenario, opts: &SolveOptions, trajectory: Option<&Path>) -> Result<SolveOutput> {
    let grid = SpaceTimeGrid::new(opts.nx, opts.nt, scenario.coefficients.period)?;
    let m = build_monodromy_theta(scenario, &grid, opts.alpha, opts.theta)?;
    let r = principal_eigenvalue_with(&m, &opts.power)?;
    if let Some(path) = trajectory {
        r.save_trajectory_csv(path)?;
    }
    Ok(SolveOutput {
        scenario: scenario.name.clone(),
        alpha: opts.alpha,
        nx: opts.nx,
        nt: opts.nt,
        lambda: r.lambda,
        residual: r.residual,
        iterations: r.iterations,
        restarts: r.restarts,
    })
}

pub fn cmd_sweep(
    scenario: &Scenario,
    alphas: &[f64],
    policy: &GridPolicy,
    out: Option<&Path>,
) -> Result<SweepTable> {
    let table = alpha_sweep(scenario, alphas, policy)?;
    if let Some(path) = out {
        table.save_csv(path)?;
    }
    Ok(table)
}

pub fn cmd_limit(scenario: &Scenario, mode: Option<LimitMode>, grid: &SpaceTimeGrid) -> Result<LimitPrediction> {
    match mode {
        Some(mode) => predict_mode(scenario, mode, grid),
        None => predict(scenario, grid),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Status {
    Pass,
    Warn,
    Fail,
}

impl Status {
    pub fn from_flags(gap_ok: bool, trend: bool) -> Self {
        match (gap_ok, trend) {
            (true, true) => Status::Pass,
            (false, false) => Status::Fail,
            _ => Status::Warn,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Warn => "WARN",
            Status::Fail => "FAIL",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub scenario: String,
    pub prediction: Option<LimitPrediction>,
    pub rows: Vec<SweepRow>,
    pub gaps: Vec<f64>,
    pub final_gap: f64,
    pub trend: bool,
    pub status: Status,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl VerifyReport {
    fn failed(scenario: &Scenario, prediction: Option<LimitPrediction>, note: String) -> Self {
        VerifyReport {
            scenario: scenario.name.clone(),
            prediction,
            rows: Vec::new(),
            gaps: Vec::new(),
            final_gap: f64::NAN,
            trend: false,
            status: Status::Fail,
            notes: vec![note],
        }
    }

    pub fn summary_line(&self) -> String {
        let limit = self
            .prediction
            .as_ref()
            .map(|p| format!("{:.6}", p.minimum))
            .unwrap_or_else(|| "n/a".into());
        let last = self
            .rows
            .last()
            .map(|r| format!("{:.6}", r.lambda))
            .unwrap_or_else(|| "n/a".into());
        format!(
            "{:4} {:28} limit={limit} lambda(alpha_max)={last} gap={:.3e} trend={}",
            self.status.label(),
            self.scenario,
            self.final_gap,
            self.trend
        )
    }
}

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub alphas: Vec<f64>,
    pub gap_tol: f64,
    pub policy: GridPolicy,
    /// Grid for limit problems that need a solve of their own.
    pub limit_nx: usize,
    pub limit_nt: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            alphas: DEFAULT_ALPHAS.to_vec(),
            gap_tol: DEFAULT_GAP_TOL,
            policy: GridPolicy::default(),
            limit_nx: 401,
            limit_nt: 800,
        }
    }
}

/// True when the last three gaps do not increase.
pub fn gaps_nonincreasing(gaps: &[f64]) -> bool {
    let tail = &gaps[gaps.len().saturating_sub(3)..];
    tail.len() >= 2
        && tail.iter().all(|g| g.is_finite())
        && tail.windows(2).all(|w| w[1] <= w[0] + TREND_SLACK)
}

pub fn cmd_verify(scenario: &Scenario, opts: &VerifyOptions) -> VerifyReport {
    let prediction = SpaceTimeGrid::new(opts.limit_nx, opts.limit_nt, scenario.coefficients.period)
        .and_then(|g| predict(scenario, &g));
    let prediction = match prediction {
        Ok(p) => p,
        Err(e) => return VerifyReport::failed(scenario, None, format!("prediction failed: {e}")),
    };
    let table = match alpha_sweep(scenario, &opts.alphas, &opts.policy) {
        Ok(t) => t,
        Err(e) => return VerifyReport::failed(scenario, Some(prediction), format!("sweep failed: {e}")),
    };
    let mut notes: Vec<String> = table
        .rows
        .iter()
        .filter_map(|r| r.error.as_ref().map(|e| format!("alpha={}: {e}", r.alpha)))
        .collect();
    notes.extend(
        prediction
            .failed
            .iter()
            .map(|f| format!("limit candidate {:?} failed: {}", f.source, f.error)),
    );
    let gaps: Vec<f64> = table
        .rows
        .iter()
        .map(|r| (r.lambda - prediction.minimum).abs())
        .collect();
    let final_gap = gaps.last().copied().unwrap_or(f64::NAN);
    let trend = gaps_nonincreasing(&gaps);
    let status = Status::from_flags(final_gap <= opts.gap_tol, trend);
    VerifyReport {
        scenario: scenario.name.clone(),
        prediction: Some(prediction),
        rows: table.rows,
        gaps,
        final_gap,
        trend,
        status,
        notes,
    }
}

/// Exit status for a set of reports: 0 iff every report passes.
pub fn verify_exit_code(reports: &[VerifyReport]) -> i32 {
    if reports.iter().all(|r| r.status == Status::Pass) {
        exit::OK
    } else {
        exit::VERIFY
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report types serialize")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_table() {
        assert_eq!(Status::from_flags(true, true), Status::Pass);
        assert_eq!(Status::from_flags(true, false), Status::Warn);
        assert_eq!(Status::from_flags(false, true), Status::Warn);
        assert_eq!(Status::from_flags(false, false), Status::Fail);
    }

    #[test]
    fn trend_uses_last_three() {
        assert!(gaps_nonincreasing(&[0.0, 0.3, 0.2, 0.1]));
        assert!(!gaps_nonincreasing(&[0.3, 0.2, 0.1, 0.15]));
        assert!(gaps_nonincreasing(&[1e-15, 3e-15, 2e-15]));
        assert!(!gaps_nonincreasing(&[0.1, f64::NAN, 0.05]));
    }

    #[test]
    fn unknown_catalog_name_is_a_load_error() {
        let e = resolve_scenario("catalog:nope").unwrap_err();
        assert_eq!(exit_code(&e), exit::LOAD);
    }
}
