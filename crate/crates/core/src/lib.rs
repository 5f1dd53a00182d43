//! Optimal control of a biomass pre-processing line.
//!
//! A [`scenario::Scenario`] describes the equipment graph, bale population
//! and economics. From it the [`formulations`] module builds two linear
//! programs over a period-indexed [`pattern::Schedule`]: a throughput
//! maximizing feed-forward model and a hybrid model that also penalizes
//! changes of the reactor feed and sizes storage expansion. [`mintime`]
//! searches for the shortest horizon that processes every bale and
//! [`metrics`] turns trajectories into KPIs.
//!
//! ```no_run
//! use feedflow_core::{formulations, metrics, mintime, scenario};
//!
//! let sc = scenario::load_scenario("scenarios/switchgrass_pdu.toml")?
//!     .with_period(10.0)?;
//! let pattern = sc.default_pattern.clone().unwrap();
//! let opts = mintime::MinTimeOptions::new(formulations::Control::Hpc);
//! let result = mintime::min_time(&sc, &pattern, &opts)?;
//! let kpi = metrics::kpis(&result.trajectory, &sc);
//! println!("{:.2} h, CoV {:.4}", result.hours, kpi.coefficient_of_variation);
//! # Ok::<(), feedflow_core::Error>(())
//! ```

use std::path::Path;

pub mod flowsheet;
pub mod formulations;
pub mod metrics;
pub mod mintime;
pub mod pattern;
pub mod scenario;

pub use feedflow_lp as lp;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}{}: {message}", file.as_deref().map(|f| format!("{f}: ")).unwrap_or_default(), line.map(|l| format!("line {l}")).unwrap_or_else(|| "parse error".into()))]
    Parse {
        file: Option<String>,
        line: Option<usize>,
        message: String,
    },
    #[error("invalid {field}: {rule}")]
    Invalid { field: String, rule: String },
    #[error("invalid process graph: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Graph(Vec<flowsheet::Diagnostic>),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("unbounded: {0}")]
    Unbounded(String),
    #[error("solver iteration limit reached: {0}")]
    SolverLimit(String),
    #[error(transparent)]
    Lp(#[from] feedflow_lp::Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl Error {
    pub fn invalid(field: impl Into<String>, rule: impl Into<String>) -> Self {
        Error::Invalid {
            field: field.into(),
            rule: rule.into(),
        }
    }

    pub(crate) fn in_file(self, path: &Path) -> Self {
        match self {
            Error::Parse { line, message, .. } => Error::Parse {
                file: Some(path.display().to_string()),
                line,
                message,
            },
            other => other,
        }
    }

    /// Process exit code: 1 infeasible or unbounded, 2 parse or I/O,
    /// 3 invariant violation, 4 solver limit.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Infeasible(_) | Error::Unbounded(_) => 1,
            Error::Parse { .. } | Error::Io { .. } => 2,
            Error::Lp(feedflow_lp::Error::Mps { .. } | feedflow_lp::Error::Io(_)) => 2,
            Error::Invalid { .. } | Error::Graph(_) | Error::Lp(_) => 3,
            Error::SolverLimit(_) => 4,
        }
    }
}
