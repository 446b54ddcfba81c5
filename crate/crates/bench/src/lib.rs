//! Fixtures shared by the solver benchmarks.

use floquet_advect::{build_monodromy, catalog_scenario, MonodromyOperator, Scenario, SpaceTimeGrid, Tridiagonal};

/// A diagonally dominant tridiagonal system of size `n`.
pub fn dominant_system(n: usize) -> Tridiagonal {
    let sub = (0..n).map(|i| if i == 0 { 0.0 } else { -1.0 - 0.1 * (i % 3) as f64 }).collect();
    let sup = (0..n).map(|i| if i + 1 == n { 0.0 } else { -1.0 }).collect();
    let diag = (0..n).map(|i| 3.0 + 0.01 * i as f64).collect();
    Tridiagonal::new(sub, diag, sup)
}

pub fn scenario(name: &str) -> Scenario {
    catalog_scenario(name).unwrap_or_else(|| panic!("no built-in scenario '{name}'"))
}

/// Period map of a built-in scenario on an `nx` by `nt` grid.
pub fn period_map(name: &str, nx: usize, nt: usize, alpha: f64) -> MonodromyOperator {
    let s = scenario(name);
    let grid = SpaceTimeGrid::new(nx, nt, s.coefficients.period).expect("valid grid");
    build_monodromy(&s, &grid, alpha).expect("period map")
}
