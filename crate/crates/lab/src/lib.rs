//! Batch front end for `speclab-core`: run configs, CSV reports, parameter
//! sweeps and the acceptance battery.

pub mod commands;
pub mod config;
pub mod report;
pub mod suite;
pub mod sweep;

use speclab_core::comparisons::ComparisonError;
use speclab_core::identities::IdentityError;

pub use config::{Command, ConfigError, RunConfig};
pub use report::{Provenance, Report, ReportRow, VerdictRow};

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("precondition abort: {0}")]
    Precondition(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("empty sweep")]
    EmptySweep,
    #[error("cannot write report: {0}")]
    Io(#[from] std::io::Error),
}

impl LabError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Config(_) | LabError::Invalid(_) | LabError::EmptySweep => 3,
            LabError::Precondition(_) => 2,
            LabError::Solver(_) | LabError::Io(_) => 1,
        }
    }
}

impl From<ComparisonError> for LabError {
    fn from(e: ComparisonError) -> Self {
        match e {
            ComparisonError::Curvature(ref r) => LabError::Precondition(format!(
                "{e}; first offending samples (t, theta, excess): {:?}",
                &r.violations[..r.violations.len().min(3)]
            )),
            ComparisonError::Precondition(ref p) => {
                LabError::Precondition(format!("{} failed: {} (worst {:.6e})", p.name, p.detail, p.worst))
            }
            ComparisonError::DegenerateTrialFunction { max_variant_nontrivial, .. } => LabError::Precondition(format!(
                "{e}; max{{a, 0}} would {}be non-trivial",
                if max_variant_nontrivial { "" } else { "not " }
            )),
            ComparisonError::InvalidInput(m) => LabError::Invalid(m.to_string()),
            other => LabError::Solver(other.to_string()),
        }
    }
}

impl From<IdentityError> for LabError {
    fn from(e: IdentityError) -> Self {
        match e {
            IdentityError::Precondition(_) | IdentityError::NotHarmonic { .. } => LabError::Precondition(e.to_string()),
            IdentityError::InvalidInput(m) => LabError::Invalid(m.to_string()),
            other => LabError::Solver(other.to_string()),
        }
    }
}

/// Converts any other core error into a solver failure.
pub(crate) fn solver<E: std::fmt::Display>(e: E) -> LabError {
    LabError::Solver(e.to_string())
}
