//! Scenario configuration, deterministic execution, statistics, and report
//! emission: the artifact's external surface.

pub mod config;
pub mod fixtures;
pub mod report;
pub mod runner;
pub mod stats;

pub use config::{load_scenario, GameKind, GameParams, ScenarioConfig};
pub use report::{
    emit_report, ForecastReport, GuardMatrixEntry, ReportFormat, SimReport, StrategyReport,
};
pub use runner::{guard_bypass_matrix, run_scenario, run_scenario_with};
pub use stats::{estimate_rates, RateEstimate};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },
    #[error("invalid scenario field {field}: {message}")]
    Validation { field: &'static str, message: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("invariant violation at {step}: {message}")]
    Invariant { step: String, message: String },
}

impl HarnessError {
    /// CLI exit code: 1 invariant violation, 2 config error, 3 I/O error.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Invariant { .. } => 1,
            HarnessError::Parse { .. } | HarnessError::Validation { .. } => 2,
            HarnessError::Io(_) => 3,
        }
    }
}
