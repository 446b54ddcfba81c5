use std::f64::consts::PI;

use floquet_advect::{
    alpha_sweep, build_monodromy, catalog_scenario, curve_average, monodromy_for_problem,
    parse_scenario, predict, principal_eigenvalue, principal_eigenvalue_with, random_positive_vector,
    BoundaryPair, GridPolicy, ParabolicProblem, PowerOptions, SpaceTimeGrid,
};
use proptest::prelude::*;

fn moving_problem(alpha: f64, centre: f64, amp: f64, v0: f64, v1: f64) -> ParabolicProblem {
    ParabolicProblem::new(
        1.0,
        1.0,
        move |x, t| -8.0 * alpha * (x - centre - amp * (2.0 * PI * t).sin()),
        move |x, t| v0 * (2.0 * PI * x).cos() + v1 * x * (2.0 * PI * t).sin(),
    )
}

fn grid() -> SpaceTimeGrid {
    SpaceTimeGrid::new(41, 40, 1.0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn period_map_is_positive(
        alpha in 0.0..300.0_f64, centre in 0.2..0.8_f64, amp in 0.0..0.15_f64,
        v0 in -2.0..2.0_f64, v1 in -2.0..2.0_f64, seed in 0u64..1000,
    ) {
        let m = monodromy_for_problem(&moving_problem(alpha, centre, amp, v0, v1), &grid(), BoundaryPair::neumann(), 1.0).unwrap();
        let out = m.apply(&random_positive_vector(41, seed)).unwrap();
        prop_assert!(out.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn constant_potential_scales_the_map(
        alpha in 0.0..100.0_f64, c in -3.0..3.0_f64, seed in 0u64..1000,
    ) {
        let base = moving_problem(alpha, 0.5, 0.1, 0.0, 0.0);
        let shifted = base.with_potential(move |_, _| c);
        let g = grid();
        let a = monodromy_for_problem(&base, &g, BoundaryPair::neumann(), 1.0).unwrap();
        let b = monodromy_for_problem(&shifted, &g, BoundaryPair::neumann(), 1.0).unwrap();
        let u = random_positive_vector(41, seed);
        let (ua, ub) = (a.apply(&u).unwrap(), b.apply(&u).unwrap());
        for (x, y) in ua.iter().zip(&ub) {
            prop_assert!((x * (-c).exp() - y).abs() <= 1e-12 * x.abs());
        }
    }

    #[test]
    fn eigenvalue_shifts_with_the_potential(
        alpha in 0.0..200.0_f64, v0 in -2.0..2.0_f64, v1 in -2.0..2.0_f64, c in -5.0..5.0_f64,
    ) {
        let p = moving_problem(alpha, 0.5, 0.1, v0, v1);
        let v = p.potential.clone();
        let q = p.with_potential(move |x, t| v(x, t) + c);
        let g = grid();
        let a = principal_eigenvalue(&monodromy_for_problem(&p, &g, BoundaryPair::neumann(), 1.0).unwrap(), 1e-12, 100_000).unwrap().lambda;
        let b = principal_eigenvalue(&monodromy_for_problem(&q, &g, BoundaryPair::neumann(), 1.0).unwrap(), 1e-12, 100_000).unwrap().lambda;
        prop_assert!((b - a - c).abs() < 1e-9);
    }

    #[test]
    fn eigenvalue_is_monotone_in_the_potential(
        alpha in 0.0..200.0_f64, v0 in -2.0..2.0_f64, bump in 0.0..2.0_f64, centre in 0.0..1.0_f64,
    ) {
        let p = moving_problem(alpha, 0.5, 0.1, v0, 0.5);
        let v = p.potential.clone();
        let q = p.with_potential(move |x, t| v(x, t) + bump * (-((x - centre) / 0.15).powi(2)).exp() * (1.0 + t));
        let g = grid();
        let a = principal_eigenvalue(&monodromy_for_problem(&p, &g, BoundaryPair::neumann(), 1.0).unwrap(), 1e-12, 100_000).unwrap().lambda;
        let b = principal_eigenvalue(&monodromy_for_problem(&q, &g, BoundaryPair::neumann(), 1.0).unwrap(), 1e-12, 100_000).unwrap().lambda;
        prop_assert!(b >= a - 1e-12);
    }

    #[test]
    fn time_origin_does_not_matter(alpha in 0.0..200.0_f64, v1 in -2.0..2.0_f64, k in 1usize..40) {
        let m = monodromy_for_problem(&moving_problem(alpha, 0.45, 0.12, 1.0, v1), &grid(), BoundaryPair::neumann(), 1.0).unwrap();
        let a = principal_eigenvalue(&m, 1e-12, 100_000).unwrap().lambda;
        let b = principal_eigenvalue(&m.rotated(k), 1e-12, 100_000).unwrap().lambda;
        prop_assert!((a - b).abs() < 1e-9 * (1.0 + a.abs()));
    }

    #[test]
    fn start_vector_does_not_matter(alpha in 0.0..200.0_f64, v0 in -2.0..2.0_f64, seed in 0u64..1000) {
        let m = monodromy_for_problem(&moving_problem(alpha, 0.5, 0.1, v0, 1.0), &grid(), BoundaryPair::neumann(), 1.0).unwrap();
        let a = principal_eigenvalue(&m, 1e-12, 100_000).unwrap().lambda;
        let opts = PowerOptions { tol: 1e-12, start: Some(random_positive_vector(41, seed)), ..PowerOptions::default() };
        let b = principal_eigenvalue_with(&m, &opts).unwrap().lambda;
        prop_assert!((a - b).abs() < 1e-9);
    }
}

#[test]
fn adjoint_mass_gathers_at_the_right_end() {
    // m = x (2 + sin 2 pi t) pushes density toward x = 1.
    let s = parse_scenario(
        r#"
name = "drift-right"
T = 1.0
[expressions]
m = "x*(2 + sin(2*pi*t))"
dxm = "2 + sin(2*pi*t)"
V = "0"
"#,
    )
    .unwrap();
    let g = SpaceTimeGrid::new(101, 100, 1.0).unwrap();
    let m = build_monodromy(&s, &g, 50.0).unwrap();
    let out = m.apply_adjoint(&vec![1.0; 101]).unwrap();
    let argmax = (0..101).max_by(|&a, &b| out[a].total_cmp(&out[b])).unwrap();
    assert_eq!(argmax, 100);
    let forward = m.apply(&vec![1.0; 101]).unwrap();
    assert!(forward.iter().all(|v| (v - 1.0).abs() < 1e-12));
}

#[test]
fn constant_potential_sweep_is_flat() {
    let s = catalog_scenario("constant-potential").unwrap();
    let policy = GridPolicy {
        nx0: 101,
        nt0: 100,
        ..GridPolicy::default()
    };
    let t = alpha_sweep(&s, &[0.0, 10.0, 100.0], &policy).unwrap();
    for r in &t.rows {
        assert!((r.lambda - 0.7).abs() < 1e-8, "{r:?}");
    }
    assert!(t.to_csv().starts_with("alpha,lambda,residual,iterations,nx,nt\n"));
}

#[test]
fn increasing_slope_gaps_shrink_toward_the_right_end_average() {
    let s = catalog_scenario("monotone-increasing").unwrap();
    let limit = curve_average(|x, t| s.coefficients.potential.eval(x, t), |_| 1.0, 1.0, 512).unwrap();
    let t = alpha_sweep(&s, &[10.0, 30.0, 100.0, 300.0], &GridPolicy::default()).unwrap();
    let gaps: Vec<f64> = t.rows.iter().map(|r| (r.lambda - limit).abs()).collect();
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
}

#[test]
fn curve_average_and_spatial_formula_agree_without_plateaus() {
    let unlabeled = catalog_scenario("monotone-increasing").unwrap();
    let mut labeled = unlabeled.clone();
    labeled.annotation.as_mut().unwrap().curves.clear();
    labeled.annotation.as_mut().unwrap().labels = Some(vec![floquet_advect::IntervalLabel::Pos]);
    labeled.expected_limit = Some(floquet_advect::ExpectedLimit::SpatialFormula);
    let g = SpaceTimeGrid::new(101, 100, 1.0).unwrap();
    let a = predict(&unlabeled, &g).unwrap().minimum;
    let b = predict(&labeled, &g).unwrap().minimum;
    assert!((a - b).abs() < 1e-10, "{a} vs {b}");
}

#[test]
fn curve_average_values() {
    let v = |x: f64, _t: f64| x;
    let l = curve_average(v, |t| t, 1.0, 64).unwrap();
    assert!((l - 0.5).abs() < 1e-10);
    for k in [0.1, 0.5, 0.9] {
        let l = curve_average(|_x, t| (2.0 * PI * t).sin(), move |_| k, 1.0, 64).unwrap();
        assert!(l.abs() < 1e-12);
    }
}
