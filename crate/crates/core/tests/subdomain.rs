use std::f64::consts::PI;

use approx::assert_relative_eq;
use floquet_advect::{
    builtin_catalog, classify, monodromy_for_problem, parse_scenario, principal_eigenvalue,
    robin_eigenvalue, shrinking_strip_limit, subdomain_eigenvalue, BoundaryPair, Coefficients,
    Curve, EndType, MovingInterval, ParabolicProblem, RobinForm, SpaceTimeGrid,
};
use floquet_advect::subdomain::robin_scan;

fn coefficients(v: &str) -> Coefficients {
    let text = format!(
        "name = \"c\"\nT = 1.0\n[expressions]\nm = \"0\"\ndxm = \"0\"\nV = \"{v}\"\n"
    );
    parse_scenario(&text).unwrap().coefficients
}

/// Richardson value from three levels with `nt = 2 nx`, fitting `l0 + a dt + b dt^2`.
fn extrapolated(f: impl Fn(&SpaceTimeGrid) -> f64) -> f64 {
    let pts: Vec<(f64, f64)> = [101usize, 201, 401]
        .iter()
        .map(|&nx| {
            let g = SpaceTimeGrid::new(nx, 2 * nx, 1.0).unwrap();
            (g.dt(), f(&g))
        })
        .collect();
    let (s, l): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    l[0] * s[1] * s[2] / ((s[0] - s[1]) * (s[0] - s[2]))
        + l[1] * s[0] * s[2] / ((s[1] - s[0]) * (s[1] - s[2]))
        + l[2] * s[0] * s[1] / ((s[2] - s[0]) * (s[2] - s[1]))
}

#[test]
fn neumann_subdomain_with_zero_potential_is_zero() {
    let c = coefficients("0");
    let g = SpaceTimeGrid::new(81, 40, 1.0).unwrap();
    for (a, b) in [(0.0, 1.0), (0.1, 0.35), (0.5, 0.95)] {
        let r = subdomain_eigenvalue(&c, &MovingInterval::fixed(a, b), EndType::N, EndType::N, &g).unwrap();
        assert!(r.lambda.abs() < 1e-10, "{}", r.lambda);
    }
}

#[test]
fn dirichlet_half_width_is_four_pi_squared() {
    let c = coefficients("0");
    let interval = MovingInterval::fixed(0.25, 0.75);
    let l = extrapolated(|g| {
        subdomain_eigenvalue(&c, &interval, EndType::D, EndType::D, g).unwrap().lambda
    });
    assert_relative_eq!(l, 4.0 * PI * PI, max_relative = 1e-3);
}

#[test]
fn mixed_unit_width_is_quarter_pi_squared() {
    let c = coefficients("0");
    let interval = MovingInterval::fixed(0.0, 1.0);
    let l = extrapolated(|g| {
        subdomain_eigenvalue(&c, &interval, EndType::N, EndType::D, g).unwrap().lambda
    });
    assert_relative_eq!(l, PI * PI / 4.0, max_relative = 1e-3);
}

#[test]
fn robin_root_matches_dispersion_relation() {
    // Even ground state cos(k (x - 1/2)) with k tan(k/2) = eta, found by bisection.
    let eta = 1.0;
    let (mut lo, mut hi) = (1e-9, PI - 1e-9);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid * (mid / 2.0).tan() < eta {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let k = 0.5 * (lo + hi);
    let c = coefficients("0");
    let interval = MovingInterval::fixed(0.0, 1.0);
    let l = extrapolated(|g| {
        robin_eigenvalue(&c, &interval, eta, RobinForm::NeumannForm, g).unwrap().lambda
    });
    assert!((l - k * k).abs() < 1e-6, "{l} vs {}", k * k);
}

#[test]
fn robin_constant_potential_shifts_exactly() {
    let g = SpaceTimeGrid::new(61, 30, 1.0).unwrap();
    let interval = MovingInterval::fixed(0.2, 0.7);
    for eta in [-1.0, 0.0, 0.5, 2.0] {
        let a = robin_eigenvalue(&coefficients("0"), &interval, eta, RobinForm::NeumannForm, &g)
            .unwrap()
            .lambda;
        let b = robin_eigenvalue(&coefficients("1.75"), &interval, eta, RobinForm::NeumannForm, &g)
            .unwrap()
            .lambda;
        assert!((b - a - 1.75).abs() < 1e-9, "eta={eta}: {a} {b}");
    }
}

#[test]
fn static_curves_match_a_direct_solve_on_the_strip() {
    let c = coefficients("cos(2*pi*x) + x*sin(2*pi*t)");
    let (lo, hi) = (0.25, 0.75);
    let interval = MovingInterval::fixed(lo, hi);
    let unit = SpaceTimeGrid::new(51, 100, 1.0).unwrap();
    let strip = SpaceTimeGrid::on_interval(51, 100, lo, hi, 1.0).unwrap();
    let direct_problem = ParabolicProblem::from_coefficients(&c, 0.0);
    for (p, q) in [(EndType::N, EndType::N), (EndType::D, EndType::N), (EndType::D, EndType::D)] {
        let via_transform = subdomain_eigenvalue(&c, &interval, p, q, &unit).unwrap().lambda;
        let m = monodromy_for_problem(&direct_problem, &strip, BoundaryPair::new(p.kind(), q.kind()), 1.0).unwrap();
        let direct = principal_eigenvalue(&m, 1e-12, 100_000).unwrap().lambda;
        assert!((via_transform - direct).abs() < 1e-8, "{p:?}{q:?}: {via_transform} vs {direct}");
    }
}

#[test]
fn oscillating_box_stays_above_the_static_value() {
    // Compared with the static box on the same grid, so that time-stepping
    // error cancels.
    let c = coefficients("0");
    let g = SpaceTimeGrid::new(101, 200, 1.0).unwrap();
    let w = 0.5;
    let fixed = subdomain_eigenvalue(&c, &MovingInterval::fixed(0.2, 0.2 + w), EndType::D, EndType::D, &g)
        .unwrap()
        .lambda;
    for amp in [0.02, 0.05, 0.1] {
        let lower = Curve::new(
            &format!("0.25 + {amp}*sin(2*pi*t)"),
            &format!("{}*cos(2*pi*t)", 2.0 * PI * amp),
        )
        .unwrap();
        let upper = Curve::new(
            &format!("0.75 + {amp}*sin(2*pi*t)"),
            &format!("{}*cos(2*pi*t)", 2.0 * PI * amp),
        )
        .unwrap();
        let l = subdomain_eigenvalue(&c, &MovingInterval::new(lower, upper), EndType::D, EndType::D, &g)
            .unwrap()
            .lambda;
        assert!(l >= fixed - 1e-6, "amplitude {amp}: {l} < {fixed}");
    }
}

#[test]
fn robin_is_monotone_in_eta_on_catalog_subdomains() {
    let g = SpaceTimeGrid::new(61, 60, 1.0).unwrap();
    let etas = [-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0];
    let mut checked = 0;
    for s in builtin_catalog() {
        let Some(a) = s.annotation.as_ref() else { continue };
        if a.labels.is_none() {
            continue;
        }
        let structure = classify(&s).unwrap();
        let plateaus = structure
            .e_nn
            .iter()
            .chain(&structure.e_nd)
            .chain(&structure.e_dn)
            .chain(&structure.e_dd);
        for &i in plateaus {
            let interval = MovingInterval::new(a.kappa(i), a.kappa(i + 1));
            let table = robin_scan(&s.coefficients, &interval, &etas, RobinForm::NeumannForm, &g).unwrap();
            for w in table.rows.windows(2) {
                assert!(w[1].1 >= w[0].1 - 1e-12, "{} plateau {i}: {:?}", s.name, table.rows);
            }
            checked += 1;
        }
    }
    assert!(checked >= 10, "only {checked} plateaus");
}

#[test]
fn robin_approaches_neumann_linearly() {
    let c = coefficients("cos(2*pi*x) + 0.5*sin(2*pi*t)");
    let interval = MovingInterval::new(
        Curve::new("0.2 + 0.05*sin(2*pi*t)", "0.1*pi*cos(2*pi*t)").unwrap(),
        Curve::constant(0.7),
    );
    let g = SpaceTimeGrid::new(61, 60, 1.0).unwrap();
    let nn = subdomain_eigenvalue(&c, &interval, EndType::N, EndType::N, &g).unwrap().lambda;
    let slope = |eta: f64| {
        let l = robin_eigenvalue(&c, &interval, eta, RobinForm::NeumannForm, &g).unwrap().lambda;
        (l - nn).abs() / eta.abs()
    };
    let reference = slope(0.1);
    for eta in [-0.1, 0.01, -0.01, 1e-3, -1e-3] {
        let s = slope(eta);
        assert!(s <= 2.0 * reference + 1e-6, "eta={eta}: slope {s} vs {reference}");
    }
}

#[test]
fn shrinking_strip_gaps_decrease() {
    let c = coefficients("cos(2*pi*x)");
    let g = SpaceTimeGrid::new(101, 100, 1.0).unwrap();
    let t = shrinking_strip_limit(&c, &Curve::constant(0.25), &[0.1, 0.05, 0.025], &g).unwrap();
    assert!(t.to_csv().starts_with("delta,lambda\n"));
    let gaps: Vec<f64> = t.rows.iter().map(|r| r.1.abs()).collect();
    assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2], "{gaps:?}");
    assert!(gaps[2] < 2e-2);
}

#[test]
fn robin_scan_table_header() {
    let c = coefficients("x");
    let g = SpaceTimeGrid::new(41, 20, 1.0).unwrap();
    let t = robin_scan(&c, &MovingInterval::fixed(0.1, 0.6), &[0.0, 1.0], RobinForm::NeumannForm, &g).unwrap();
    let csv = t.to_csv();
    assert!(csv.starts_with("eta,lambda\n"));
    assert_eq!(csv.lines().count(), 3);
}
