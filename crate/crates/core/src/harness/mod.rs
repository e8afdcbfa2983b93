//! Experiment drivers behind the `isocap` command line tool.
//!
//! Each command reads [`Settings`], writes its tables into the output
//! directory and returns a JSON summary plus a [`Status`] that maps onto the
//! process exit code.

mod config;
mod experiments;
mod output;

pub use config::{RunSettings, Settings, KNOWN_KEYS};
pub use experiments::{
    cmd_asym, cmd_cap, cmd_fuglede, cmd_profile, cmd_spectrum, cmd_sweep, cmd_truncation, family_from_settings, run,
    AsymRow, Command, CommandOutput, ProfileRow, SpectrumRow, Status, SweepSummary, TruncationSummary,
};
pub use output::{
    csv_string, fit_line, loglog_fit, scatter_svg, write_csv, write_json, LineFit, RunRecord, Verdict,
};

use serde_json::json;
use thiserror::Error;

use crate::capacity::CapacityError;
use crate::domains::DomainError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HarnessError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Solver(String),
    #[error("{0}")]
    Property(String),
    #[error("{0}")]
    Io(String),
}

impl HarnessError {
    /// 2 configuration (including unusable paths), 3 solver failure,
    /// 4 property violation.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Io(_) => 2,
            Self::Solver(_) => 3,
            Self::Property(_) => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Config(_) => "config",
            Self::Solver(_) => "solver",
            Self::Property(_) => "property",
            Self::Io(_) => "io",
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({ "error": self.kind(), "message": self.to_string(), "exit_code": self.exit_code() })
    }
}

impl From<DomainError> for HarnessError {
    fn from(e: DomainError) -> Self {
        Self::Config(e.to_string())
    }
}

impl From<CapacityError> for HarnessError {
    fn from(e: CapacityError) -> Self {
        match e {
            CapacityError::Input(_)
            | CapacityError::OuterMargin { .. }
            | CapacityError::NoClosedForm
            | CapacityError::Domain(_) => Self::Config(e.to_string()),
            CapacityError::Conditioning(_) | CapacityError::Residual { .. } | CapacityError::NoHits(_) => {
                Self::Solver(e.to_string())
            }
        }
    }
}
