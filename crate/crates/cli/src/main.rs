use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use floquet_advect::{
    builtin_catalog, Error, GridPolicy, LimitMode, PowerOptions, SpaceTimeGrid, DEFAULT_MAX_ITER,
    DEFAULT_TOL,
};
use floquet_advect_cli::{
    cmd_limit, cmd_solve, cmd_sweep, cmd_verify, exit, exit_code, resolve_scenario, to_json,
    verify_exit_code, SolveOptions, VerifyOptions, VerifyReport, DEFAULT_GAP_TOL,
};
use rayon::prelude::*;

#[derive(Parser)]
#[command(name = "floquet-advect", version, about = "Principal eigenvalues of time-periodic advection-diffusion operators")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Principal eigenvalue for one alpha.
    Solve {
        /// Scenario file, or catalog:NAME.
        scenario: String,
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 201)]
        nx: usize,
        #[arg(long, default_value_t = 400)]
        nt: usize,
        #[command(flatten)]
        solver: SolverArgs,
        /// Write the eigenfunction trajectory as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Principal eigenvalue over a list of alphas.
    Sweep {
        scenario: String,
        #[arg(long, value_delimiter = ',', default_values_t = [10.0, 30.0, 100.0, 300.0])]
        alphas: Vec<f64>,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Predicted large-alpha limit.
    Limit {
        scenario: String,
        #[arg(long, value_enum)]
        mode: Option<Mode>,
        /// Grid for limit problems that need their own solve.
        #[arg(long, default_value_t = 401)]
        nx: usize,
        #[arg(long, default_value_t = 800)]
        nt: usize,
    },
    /// Compare sweeps with predicted limits.
    Verify {
        #[arg(required_unless_present = "all_catalog", conflicts_with = "all_catalog")]
        scenario: Option<String>,
        #[arg(long)]
        all_catalog: bool,
        #[arg(long, default_value_t = DEFAULT_GAP_TOL)]
        gap_tol: f64,
        #[arg(long, value_delimiter = ',', default_values_t = [10.0, 30.0, 100.0, 300.0])]
        alphas: Vec<f64>,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        solver: SolverArgs,
        /// Write the reports as JSON to this file as well.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
    max_iter: usize,
    /// 1 for implicit Euler, 0.5 for Crank-Nicolson.
    #[arg(long, default_value_t = 1.0)]
    theta: f64,
    /// Seed for restart vectors.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct GridArgs {
    /// Minimum number of space nodes.
    #[arg(long, default_value_t = 201)]
    nx: usize,
    /// Minimum number of time steps.
    #[arg(long, default_value_t = 400)]
    nt: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Nondegenerate,
    Spatial,
    Temporal,
    Mixed,
}

impl From<Mode> for LimitMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Nondegenerate => LimitMode::Nondegenerate,
            Mode::Spatial => LimitMode::Spatial,
            Mode::Temporal => LimitMode::Temporal,
            Mode::Mixed => LimitMode::Mixed,
        }
    }
}

fn policy(grid: &GridArgs, solver: &SolverArgs) -> GridPolicy {
    GridPolicy {
        nx0: grid.nx,
        nt0: grid.nt,
        theta: solver.theta,
        tol: solver.tol,
        max_iter: solver.max_iter,
        seed: solver.seed,
        ..GridPolicy::default()
    }
}

fn fail(e: &Error) -> i32 {
    eprintln!("error: {e}");
    exit_code(e)
}

fn run(cli: Cli) -> i32 {
    match cli.command {
        Command::Solve {
            scenario,
            alpha,
            nx,
            nt,
            solver,
            out,
        } => {
            let scenario = match resolve_scenario(&scenario) {
                Ok(s) => s,
                Err(e) => return fail(&e),
            };
            let opts = SolveOptions {
                alpha,
                nx,
                nt,
                theta: solver.theta,
                power: PowerOptions {
                    tol: solver.tol,
                    max_iter: solver.max_iter,
                    seed: solver.seed,
                    start: None,
                },
            };
            match cmd_solve(&scenario, &opts, out.as_deref()) {
                Ok(r) => {
                    println!("{}", to_json(&r));
                    exit::OK
                }
                Err(e) => fail(&e),
            }
        }
        Command::Sweep {
            scenario,
            alphas,
            grid,
            solver,
            out,
        } => {
            let scenario = match resolve_scenario(&scenario) {
                Ok(s) => s,
                Err(e) => return fail(&e),
            };
            match cmd_sweep(&scenario, &alphas, &policy(&grid, &solver), out.as_deref()) {
                Ok(table) => {
                    println!("{}", to_json(&table));
                    for r in table.rows.iter().filter(|r| r.failed()) {
                        eprintln!("warning: alpha={} failed: {}", r.alpha, r.error.as_deref().unwrap_or(""));
                    }
                    if table.failures() > 0 {
                        exit::PARTIAL
                    } else {
                        exit::OK
                    }
                }
                Err(e) => fail(&e),
            }
        }
        Command::Limit { scenario, mode, nx, nt } => {
            let scenario = match resolve_scenario(&scenario) {
                Ok(s) => s,
                Err(e) => return fail(&e),
            };
            let result = SpaceTimeGrid::new(nx, nt, scenario.coefficients.period)
                .and_then(|g| cmd_limit(&scenario, mode.map(Into::into), &g));
            match result {
                Ok(p) => {
                    println!("{}", to_json(&p));
                    for f in &p.failed {
                        eprintln!("warning: candidate {:?} failed: {}", f.source, f.error);
                    }
                    if p.failed.is_empty() {
                        exit::OK
                    } else {
                        exit::PARTIAL
                    }
                }
                Err(e) => fail(&e),
            }
        }
        Command::Verify {
            scenario,
            all_catalog,
            gap_tol,
            alphas,
            grid,
            solver,
            out,
        } => {
            let scenarios = if all_catalog {
                builtin_catalog()
            } else {
                match resolve_scenario(scenario.as_deref().unwrap_or_default()) {
                    Ok(s) => vec![s],
                    Err(e) => return fail(&e),
                }
            };
            let opts = VerifyOptions {
                alphas,
                gap_tol,
                policy: policy(&grid, &solver),
                ..VerifyOptions::default()
            };
            let reports: Vec<VerifyReport> = scenarios.par_iter().map(|s| cmd_verify(s, &opts)).collect();
            for r in &reports {
                eprintln!("{}", r.summary_line());
                for n in &r.notes {
                    eprintln!("     note: {n}");
                }
            }
            let json = to_json(&reports);
            println!("{json}");
            if let Some(path) = out {
                if let Err(e) = std::fs::write(&path, &json) {
                    eprintln!("error: cannot write {}: {e}", path.display());
                    return exit::LOAD;
                }
            }
            verify_exit_code(&reports)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: cannot configure {jobs} worker threads: {e}");
            return ExitCode::from(exit::LOAD as u8);
        }
    }
    ExitCode::from(run(cli) as u8)
}
