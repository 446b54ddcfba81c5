//! Limit problems for drift of the form `dxm(x, t) = b(t)`: ODE segments with
//! collapse resets where `b` has a sign, heat segments where `b` vanishes,
//! and the strip/heat composite for mixed degeneracy.

use serde::{Deserialize, Serialize};

use crate::discretize::{uniform_times, BoundaryPair, ParabolicProblem, SpaceTimeGrid};
use crate::error::{Error, Result};
use crate::floquet::{
    pde_steps, principal_eigenvalue_with, EigenResult, MonodromyOperator, PeriodStep,
    PowerOptions,
};
use crate::limits::simpson;
use crate::scenario::{Scenario, EPS_SIGN};

/// Largest admitted spatial variation of slices on collapse segments.
pub const CONSTANT_PROFILE_TOL: f64 = 1e-10;

/// A linear map applied at a segment boundary without advancing time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResetKind {
    /// `u -> u(0) * 1`.
    CollapseToLeft,
    /// `u -> u(1) * 1`.
    CollapseToRight,
    /// Constant extension of the node values at `lo` and `hi` outward.
    Extend { lo: usize, hi: usize },
    Identity,
    /// Zero outside `lo ..= hi`.
    Restrict { lo: usize, hi: usize },
}

impl ResetKind {
    pub fn apply(&self, u: &mut [f64]) {
        let n = u.len();
        if n == 0 {
            return;
        }
        match *self {
            ResetKind::CollapseToLeft => {
                let c = u[0];
                u.fill(c);
            }
            ResetKind::CollapseToRight => {
                let c = u[n - 1];
                u.fill(c);
            }
            ResetKind::Extend { lo, hi } => {
                let (a, b) = (u[lo], u[hi]);
                u[..lo].fill(a);
                u[hi + 1..].fill(b);
            }
            ResetKind::Identity => {}
            ResetKind::Restrict { lo, hi } => {
                u[..lo].fill(0.0);
                u[hi + 1..].fill(0.0);
            }
        }
    }

    /// Transpose of [`ResetKind::apply`].
    pub fn apply_adjoint(&self, u: &mut [f64]) {
        let n = u.len();
        if n == 0 {
            return;
        }
        match *self {
            ResetKind::CollapseToLeft | ResetKind::CollapseToRight => {
                let total: f64 = u.iter().sum();
                u.fill(0.0);
                let j = if *self == ResetKind::CollapseToLeft { 0 } else { n - 1 };
                u[j] = total;
            }
            ResetKind::Extend { lo, hi } => {
                let left: f64 = u[..lo].iter().sum();
                let right: f64 = u[hi + 1..].iter().sum();
                u[..lo].fill(0.0);
                u[hi + 1..].fill(0.0);
                u[lo] += left;
                u[hi] += right;
            }
            ResetKind::Identity => {}
            ResetKind::Restrict { .. } => self.apply(u),
        }
    }
}

/// Sign class of `b` on a time segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftLabel {
    NegDrift,
    ZeroDrift,
    PosDrift,
}

impl DriftLabel {
    fn of(value: f64) -> Self {
        if value < -EPS_SIGN {
            DriftLabel::NegDrift
        } else if value > EPS_SIGN {
            DriftLabel::PosDrift
        } else {
            DriftLabel::ZeroDrift
        }
    }
}

/// Segments `[times[i], times[i + 1]]` with labels; `times` runs from 0 to T.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemporalPartition {
    pub times: Vec<f64>,
    pub labels: Vec<DriftLabel>,
}

impl TemporalPartition {
    pub fn period(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn segments(&self) -> impl Iterator<Item = (f64, f64, DriftLabel)> + '_ {
        self.times
            .windows(2)
            .zip(&self.labels)
            .map(|(w, &l)| (w[0], w[1], l))
    }

    /// Index of the segment `(t_i, t_{i+1}]` containing `t`; `t = 0` maps to the last one.
    pub fn segment_of(&self, t: f64) -> usize {
        let n = self.labels.len();
        (0..n)
            .find(|&i| t > self.times[i] && t <= self.times[i + 1])
            .unwrap_or(n - 1)
    }
}

fn bisect(mut lo: f64, mut hi: f64, inside_left: impl Fn(f64) -> bool) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if inside_left(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Splits `[0, T]` by the sign of `b`.
///
/// Without a hint, `b` is sampled at `k T / nt`. Runs of at least three
/// near-zero samples are plateaus; a single zero between samples of equal
/// sign is merged into the signed segment, and between opposite signs marks a
/// crossing. Two consecutive zeros are ambiguous. Boundaries are refined by
/// bisection. With a hint, the given times are the boundaries and labels are
/// read from the samples inside each segment.
pub fn partition_time(
    b: impl Fn(f64) -> f64,
    period: f64,
    nt: usize,
    hint: Option<&[f64]>,
) -> Result<TemporalPartition> {
    if nt < 2 {
        return Err(Error::validation("sampling needs nt >= 2"));
    }
    if !(period > 0.0) {
        return Err(Error::validation("period must be positive"));
    }
    let ts: Vec<f64> = (0..nt).map(|k| k as f64 * period / nt as f64).collect();
    let samples: Vec<DriftLabel> = ts.iter().map(|&t| DriftLabel::of(b(t))).collect();
    match hint {
        Some(h) => partition_with_hint(&b, period, &ts, &samples, h),
        None => partition_by_scan(&b, period, &ts, samples),
    }
}

fn partition_with_hint(
    b: &impl Fn(f64) -> f64,
    period: f64,
    ts: &[f64],
    samples: &[DriftLabel],
    hint: &[f64],
) -> Result<TemporalPartition> {
    let mut times = vec![0.0];
    for &h in hint {
        if !(h > *times.last().unwrap() && h < period) {
            return Err(Error::validation(format!(
                "partition hint must be strictly increasing in (0, T); offending time {h}"
            )));
        }
        times.push(h);
    }
    times.push(period);
    let mut labels = Vec::new();
    for w in times.windows(2) {
        let (a, z) = (w[0], w[1]);
        let inside: Vec<DriftLabel> = ts
            .iter()
            .zip(samples)
            .filter(|(&t, _)| t > a && t < z)
            .map(|(_, &l)| l)
            .collect();
        let signed: Vec<DriftLabel> = inside
            .iter()
            .copied()
            .filter(|&l| l != DriftLabel::ZeroDrift)
            .collect();
        let label = if inside.is_empty() {
            DriftLabel::of(b(0.5 * (a + z)))
        } else if signed.is_empty() {
            DriftLabel::ZeroDrift
        } else {
            let first = signed[0];
            if signed.iter().any(|&l| l != first) {
                return Err(Error::HypothesisViolation(format!(
                    "b changes sign inside the hinted segment ({a}, {z})"
                )));
            }
            if inside.len() - signed.len() > 2 {
                return Err(Error::HypothesisViolation(format!(
                    "b vanishes on part of the hinted segment ({a}, {z}) only"
                )));
            }
            first
        };
        labels.push(label);
    }
    Ok(TemporalPartition { times, labels })
}

fn partition_by_scan(
    b: &impl Fn(f64) -> f64,
    period: f64,
    ts: &[f64],
    mut labels: Vec<DriftLabel>,
) -> Result<TemporalPartition> {
    let n = labels.len();
    let dt = period / n as f64;
    let zero = DriftLabel::ZeroDrift;
    if labels.iter().all(|&l| l == zero) {
        return Ok(TemporalPartition {
            times: vec![0.0, period],
            labels: vec![zero],
        });
    }
    // Rotate so that index `start` is the first sample of a signed run.
    let start = (0..n)
        .find(|&k| labels[k] != zero && labels[(k + n - 1) % n] == zero)
        .or_else(|| (0..n).find(|&k| labels[k] != labels[(k + n - 1) % n]))
        .unwrap_or(0);
    // Classify zero runs.
    let mut crossings = Vec::new();
    let mut k = 0;
    while k < n {
        let i = (start + k) % n;
        if labels[i] != zero {
            k += 1;
            continue;
        }
        let mut len = 0;
        while k + len < n && labels[(start + k + len) % n] == zero {
            len += 1;
        }
        let before = labels[(start + k + n - 1) % n];
        let after = labels[(start + k + len) % n];
        match len {
            1 if before == after => labels[i] = before,
            1 => crossings.push(i),
            2 => return Err(Error::AmbiguousSign { t: ts[i] }),
            _ => {}
        }
        k += len;
    }
    // Each crossing sample takes the label of its predecessor; the boundary
    // is located by bisection below.
    for &i in &crossings {
        labels[i] = labels[(i + n - 1) % n];
    }
    let sign = |t: f64| DriftLabel::of(b(t));
    let mut cuts = vec![0.0];
    for i in 0..n {
        let j = (i + 1) % n;
        if labels[i] == labels[j] {
            continue;
        }
        let ti = ts[i];
        let tj = ti + dt;
        let cut = if labels[i] != zero && labels[j] != zero {
            // Sign change; widen the bracket past a zero sample.
            let lo = if sign(ti) == zero { ti - dt } else { ti };
            let hi = if sign(tj) == zero { tj + dt } else { tj };
            let left_sign = b(lo).signum();
            bisect(lo, hi, |t| b(t).signum() == left_sign)
        } else if labels[i] == zero {
            bisect(ti, tj, |t| sign(t) == zero)
        } else {
            bisect(ti, tj, |t| sign(t) != zero)
        };
        cuts.push(cut.rem_euclid(period));
    }
    // Cuts that fall within the sign threshold of the period end wrap to 0.
    let tol = 1e-6 * period;
    let mut cuts: Vec<f64> = cuts
        .into_iter()
        .map(|c| if period - c < tol || c < tol { 0.0 } else { c })
        .collect();
    cuts.sort_by(|a, b| a.total_cmp(b));
    cuts.dedup_by(|a, b| (*a - *b).abs() < tol);
    cuts.push(period);
    let mut seg_labels = Vec::with_capacity(cuts.len() - 1);
    for w in cuts.windows(2) {
        let (a, z) = (w[0], w[1]);
        let label = ts
            .iter()
            .position(|&t| t > a && t < z)
            .map(|k| labels[k])
            .unwrap_or_else(|| sign(0.5 * (a + z)));
        seg_labels.push(label);
    }
    let mut k = 1;
    while k < seg_labels.len() {
        if seg_labels[k] == seg_labels[k - 1] {
            seg_labels.remove(k);
            cuts.remove(k);
        } else {
            k += 1;
        }
    }
    Ok(TemporalPartition {
        times: cuts,
        labels: seg_labels,
    })
}

fn substeps(nt: usize, len: f64, period: f64) -> usize {
    ((nt as f64 * len / period).round() as usize).max(1)
}

/// Period operator of the limit problem: resets at each segment start, exact
/// exponential decay on signed segments and drift-free heat steps on zero segments.
pub fn build_period_operator(
    scenario: &Scenario,
    partition: &TemporalPartition,
    grid: &SpaceTimeGrid,
) -> Result<MonodromyOperator> {
    build_period_operator_theta(scenario, partition, grid, 1.0)
}

pub fn build_period_operator_theta(
    scenario: &Scenario,
    partition: &TemporalPartition,
    grid: &SpaceTimeGrid,
    theta: f64,
) -> Result<MonodromyOperator> {
    let period = scenario.coefficients.period;
    if (partition.period() - period).abs() > 1e-12 * period {
        return Err(Error::validation("partition does not cover one period"));
    }
    let heat = ParabolicProblem::from_coefficients(&scenario.coefficients, 0.0);
    let v = scenario.coefficients.potential.clone();
    let xs = grid.x_nodes();
    let mut steps = Vec::new();
    for (a, z, label) in partition.segments() {
        let n = substeps(grid.nt, z - a, period);
        let times = uniform_times(a, z, n);
        match label {
            DriftLabel::NegDrift | DriftLabel::PosDrift => {
                let (reset, x) = if label == DriftLabel::NegDrift {
                    (ResetKind::CollapseToLeft, grid.lower)
                } else {
                    (ResetKind::CollapseToRight, grid.upper)
                };
                steps.push(PeriodStep::Reset(reset));
                for w in times.windows(2) {
                    let integral = simpson(|s| v.eval(x, s), w[0], w[1], 2);
                    steps.push(PeriodStep::Decay {
                        dt: w[1] - w[0],
                        t_end: w[1],
                        log_gain: -integral,
                    });
                }
            }
            DriftLabel::ZeroDrift => {
                steps.push(PeriodStep::Reset(ResetKind::Identity));
                steps.extend(pde_steps(
                    &heat,
                    &xs,
                    grid.dx(),
                    BoundaryPair::neumann(),
                    &times,
                    theta,
                    0,
                )?);
            }
        }
    }
    Ok(MonodromyOperator::new(steps, *grid))
}

/// Partition of the scenario's `b`, using its hint when present.
pub fn scenario_partition(scenario: &Scenario, nt: usize) -> Result<TemporalPartition> {
    let b = scenario
        .coefficients
        .drift_b
        .clone()
        .ok_or_else(|| Error::validation("scenario has no temporal drift b(t)"))?;
    partition_time(
        |t| b.eval(0.0, t),
        scenario.coefficients.period,
        nt,
        scenario.temporal_partition_hint.as_deref(),
    )
}

/// Largest relative spatial variation of eigenfunction slices on signed segments.
pub fn signed_segment_variation(result: &EigenResult, partition: &TemporalPartition) -> f64 {
    let mut worst = 0.0_f64;
    for (t, slice) in result.times.iter().zip(&result.eigenfunction) {
        let i = partition.segment_of(*t);
        if partition.labels[i] == DriftLabel::ZeroDrift || *t <= partition.times[0] {
            continue;
        }
        let max = slice.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = slice.iter().cloned().fold(f64::INFINITY, f64::min);
        if max > 0.0 {
            worst = worst.max((max - min) / max);
        }
    }
    worst
}

/// `lambda_inf` of the temporal limit problem.
pub fn limit_eigenvalue_temporal(scenario: &Scenario, grid: &SpaceTimeGrid) -> Result<EigenResult> {
    limit_eigenvalue_temporal_with(scenario, grid, &PowerOptions::default())
}

pub fn limit_eigenvalue_temporal_with(
    scenario: &Scenario,
    grid: &SpaceTimeGrid,
    opts: &PowerOptions,
) -> Result<EigenResult> {
    let partition = scenario_partition(scenario, grid.nt)?;
    let m = build_period_operator(scenario, &partition, grid)?;
    let result = principal_eigenvalue_with(&m, opts)?;
    let variation = signed_segment_variation(&result, &partition);
    if variation > CONSTANT_PROFILE_TOL {
        return Err(Error::HypothesisViolation(format!(
            "eigenfunction varies in x by {variation:e} on a collapse segment"
        )));
    }
    Ok(result)
}

/// Period operator of the strip/heat composite: Neumann problem on the strip
/// `[kappa1, kappa2]` over `(0, t_star]`, constant extension, Neumann problem
/// on `[0, 1]` over `(t_star, T]`, restriction to the strip.
pub fn mixed_period_operator(
    scenario: &Scenario,
    kappa1: f64,
    kappa2: f64,
    t_star: f64,
    grid: &SpaceTimeGrid,
) -> Result<MonodromyOperator> {
    let period = scenario.coefficients.period;
    if !(grid.lower <= kappa1 && kappa1 <= kappa2 && kappa2 <= grid.upper) {
        return Err(Error::validation(format!(
            "strip [{kappa1}, {kappa2}] is not inside the domain"
        )));
    }
    if !(t_star > 0.0 && t_star < period) {
        return Err(Error::validation(format!("switch time {t_star} not in (0, T)")));
    }
    let lo = grid.nearest_node(kappa1);
    let hi = grid.nearest_node(kappa2).max(lo);
    let heat = ParabolicProblem::from_coefficients(&scenario.coefficients, 0.0);
    let xs = grid.x_nodes();
    let n1 = substeps(grid.nt, t_star, period).min(grid.nt.saturating_sub(1)).max(1);
    let n2 = grid.nt.saturating_sub(n1).max(1);
    let mut steps = pde_steps(
        &heat,
        &xs[lo..=hi],
        grid.dx(),
        BoundaryPair::neumann(),
        &uniform_times(0.0, t_star, n1),
        1.0,
        lo,
    )?;
    steps.push(PeriodStep::Reset(ResetKind::Extend { lo, hi }));
    steps.extend(pde_steps(
        &heat,
        &xs,
        grid.dx(),
        BoundaryPair::neumann(),
        &uniform_times(t_star, period, n2),
        1.0,
        0,
    )?);
    steps.push(PeriodStep::Reset(ResetKind::Restrict { lo, hi }));
    Ok(MonodromyOperator::new(steps, *grid))
}

pub fn mixed_degenerate_eigenvalue(
    scenario: &Scenario,
    kappa1: f64,
    kappa2: f64,
    t_star: f64,
    grid: &SpaceTimeGrid,
) -> Result<EigenResult> {
    let m = mixed_period_operator(scenario, kappa1, kappa2, t_star, grid)?;
    let lo = grid.nearest_node(kappa1);
    let hi = grid.nearest_node(kappa2).max(lo);
    let mut start = vec![0.0; grid.nx];
    start[lo..=hi].fill(1.0);
    principal_eigenvalue_with(
        &m,
        &PowerOptions {
            start: Some(start),
            ..PowerOptions::default()
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::floquet::random_positive_vector;
    use std::f64::consts::PI;

    #[test]
    fn resets_fix_constants_and_match_adjoints() {
        let kinds = [
            ResetKind::CollapseToLeft,
            ResetKind::CollapseToRight,
            ResetKind::Extend { lo: 2, hi: 5 },
            ResetKind::Identity,
        ];
        for k in kinds {
            let mut one = vec![1.0; 9];
            k.apply(&mut one);
            assert_eq!(one, vec![1.0; 9]);
        }
        for k in kinds.into_iter().chain([ResetKind::Restrict { lo: 2, hi: 5 }]) {
            let u = random_positive_vector(9, 3);
            let w = random_positive_vector(9, 4);
            let mut ku = u.clone();
            k.apply(&mut ku);
            let mut kw = w.clone();
            k.apply_adjoint(&mut kw);
            let a: f64 = ku.iter().zip(&w).map(|(a, b)| a * b).sum();
            let b: f64 = kw.iter().zip(&u).map(|(a, b)| a * b).sum();
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn sine_drift_splits_at_half_period() {
        let p = partition_time(|t| (2.0 * PI * t).sin(), 1.0, 400, None).unwrap();
        assert_eq!(p.labels, vec![DriftLabel::PosDrift, DriftLabel::NegDrift]);
        assert!((p.times[1] - 0.5).abs() < 1e-14);
        assert_eq!(p.times, vec![0.0, p.times[1], 1.0]);
    }

    #[test]
    fn zero_drift_is_one_segment() {
        let p = partition_time(|_| 0.0, 2.0, 50, None).unwrap();
        assert_eq!(p.times, vec![0.0, 2.0]);
        assert_eq!(p.labels, vec![DriftLabel::ZeroDrift]);
    }

    #[test]
    fn plateau_then_positive() {
        let b = |t: f64| (-(2.0 * PI * t).sin()).max(0.0);
        let p = partition_time(b, 1.0, 400, None).unwrap();
        assert_eq!(p.labels, vec![DriftLabel::ZeroDrift, DriftLabel::PosDrift]);
        assert!((p.times[1] - 0.5).abs() < 1e-8);
        let h = partition_time(b, 1.0, 400, Some(&[0.5])).unwrap();
        assert_eq!(h.times, vec![0.0, 0.5, 1.0]);
        assert_eq!(h.labels, p.labels);
    }

    #[test]
    fn isolated_zero_is_merged() {
        let b = |t: f64| 1.0 + (2.0 * PI * t).cos();
        let p = partition_time(b, 1.0, 400, None).unwrap();
        assert!(p.labels.iter().all(|&l| l == DriftLabel::PosDrift));
    }

    #[test]
    fn double_zero_is_ambiguous() {
        let b = |t: f64| {
            if (0.2..0.204).contains(&t) {
                0.0
            } else {
                (2.0 * PI * t).sin()
            }
        };
        assert!(matches!(
            partition_time(b, 1.0, 400, None),
            Err(Error::AmbiguousSign { .. })
        ));
    }
}
