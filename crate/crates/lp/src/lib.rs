//! Linear programming models, a sparse revised simplex solver and fixed-format
//! MPS input/output.
//!
//! ```
//! use feedflow_lp::{LpModel, RowSense, Sense, SolverOptions, Status};
//!
//! let mut m = LpModel::new("toy", Sense::Maximize);
//! let x = m.add_var("x", 0.0, f64::INFINITY, 3.0);
//! let y = m.add_var("y", 0.0, f64::INFINITY, 2.0);
//! m.add_row("cap", [(x, 1.0), (y, 1.0)], RowSense::Le, 4.0);
//! m.add_row("mix", [(x, 1.0), (y, 3.0)], RowSense::Le, 6.0);
//! let sol = feedflow_lp::solve(&m, &SolverOptions::default()).unwrap();
//! assert_eq!(sol.status, Status::Optimal);
//! assert!((sol.objective - 12.0).abs() < 1e-9);
//! ```

mod lu;
mod model;
pub mod mps;
mod simplex;

pub use model::{Constraint, LpModel, Row, RowSense, Sense, Var, Variable};
pub use simplex::solve;

/// Environment variable overriding the default iteration limit.
pub const ITER_LIMIT_ENV: &str = "FEEDFLOW_SOLVER_ITER_LIMIT";

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("MPS line {line}: {message}")]
    Mps { line: usize, message: String },
    #[error("MPS: {0}")]
    MpsStructure(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Status::Optimal => "optimal",
            Status::Infeasible => "infeasible",
            Status::Unbounded => "unbounded",
            Status::IterationLimit => "iteration limit reached",
        })
    }
}

#[derive(Clone, Debug)]
pub struct SolverOptions {
    /// Largest bound violation of a basic variable regarded as feasible.
    pub feasibility_tol: f64,
    /// Smallest reduced cost magnitude regarded as improving.
    pub optimality_tol: f64,
    /// `None` means `200 * (rows + columns)`.
    pub iteration_limit: Option<usize>,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub degeneracy_streak: usize,
    /// Basis updates between refactorizations.
    pub refactor_interval: usize,
    /// Stop as soon as a feasible point is found.
    pub feasibility_only: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            feasibility_tol: 1e-7,
            optimality_tol: 1e-7,
            iteration_limit: None,
            degeneracy_streak: 50,
            refactor_interval: 100,
            feasibility_only: false,
        }
    }
}

impl SolverOptions {
    /// Defaults, with the iteration limit taken from
    /// [`ITER_LIMIT_ENV`] when it is set to a positive integer.
    pub fn from_env() -> Self {
        let iteration_limit = std::env::var(ITER_LIMIT_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|&v| v > 0);
        SolverOptions {
            iteration_limit,
            ..Self::default()
        }
    }
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub status: Status,
    /// Objective value in the model's own sense, offset included.
    pub objective: f64,
    pub values: Vec<f64>,
    pub row_activities: Vec<f64>,
    /// Rate of change of the objective per unit increase of each row's
    /// right-hand side. Zero unless the status is optimal.
    pub duals: Vec<f64>,
    /// Reduced costs in minimization form: for a maximization model the
    /// objective is negated first. At an optimum they are non-negative for
    /// variables at their lower bound, non-positive at the upper bound and
    /// zero for basic variables.
    pub reduced_costs: Vec<f64>,
    pub iterations: usize,
    pub phase_one_iterations: usize,
}

impl Solution {
    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }
}
