//! Case pipelines: declarative stages that chain fixed-point-free filtering,
//! restriction systems and feasibility certificates into one report.

mod report;
mod runner;
mod spec;
mod verify;

pub use report::*;
pub use runner::{fpf_report, run_case};
pub use spec::*;
pub use verify::{verify_report, verify_report_str, VerifyOutcome};

use crate::feasibility::FeasError;
use crate::restriction::RestrictionError;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CaseError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("{path}: {message}")]
    Fixture { path: String, message: String },
    #[error("no case named {0}")]
    UnknownCase(String),
    #[error("case name {0} is ambiguous: {1:?}")]
    AmbiguousCase(String, Vec<String>),
    #[error(transparent)]
    Restriction(#[from] RestrictionError),
    #[error(transparent)]
    Feasibility(#[from] FeasError),
    #[error("{0}")]
    Stage(String),
}
