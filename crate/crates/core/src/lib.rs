//! Principal eigenvalues of one-dimensional time-periodic parabolic operators
//!
//! `d/dt phi - D phi'' - alpha m_x phi' + V phi = lambda phi`
//!
//! with large advection `alpha`, and the limit values they approach.
//!
//! The solver builds the period map of an exponentially fitted implicit
//! scheme and extracts `lambda = -ln(r) / T` from its spectral radius `r` by
//! power iteration. The limit side provides curve averages of `V`, subdomain
//! eigenvalues on moving intervals, and period maps of the reduced problems
//! that arise when the drift degenerates in time.

pub mod catalog;
pub mod discretize;
pub mod error;
pub mod expr;
pub mod floquet;
pub mod limits;
pub mod scenario;
pub mod subdomain;
pub mod temporal;

pub use catalog::{builtin_catalog, catalog_scenario};
pub use discretize::{
    assemble, assemble_problem, step, BoundaryKind, BoundaryPair, ParabolicProblem, RobinForm,
    SpaceTimeGrid, SpatialOperator, Tridiagonal,
};
pub use error::{Error, Result};
pub use expr::Expr;
pub use floquet::{
    alpha_sweep, build_monodromy, build_monodromy_theta, fmt_num, monodromy_for_problem,
    principal_eigenvalue, principal_eigenvalue_with, random_positive_vector, EigenResult,
    GridPolicy, MonodromyOperator, PeriodStep, PowerOptions, SweepRow, SweepTable, DEFAULT_MAX_ITER,
    DEFAULT_TOL,
};
pub use limits::{
    classify, classify_labels, curve_average, predict, predict_limit_nondegenerate, predict_limit_spatial,
    predict_mode, Candidate, CandidateSource, CriticalStructure, LimitMode, LimitPrediction,
};
pub use scenario::{
    load_scenario, parse_scenario, save_scenario, Coefficients, Curve, CurveAnnotation,
    ExpectedLimit, IntervalLabel, Scenario,
};
pub use subdomain::{
    robin_eigenvalue, shrinking_strip_limit, subdomain_eigenvalue, transform_to_fixed_domain,
    EndType, MovingInterval, ScanTable,
};
pub use temporal::{
    build_period_operator, limit_eigenvalue_temporal, mixed_degenerate_eigenvalue,
    partition_time, DriftLabel, ResetKind, TemporalPartition,
};
