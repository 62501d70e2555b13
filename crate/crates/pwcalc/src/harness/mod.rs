//! Seeded generators, property and axiom suites, and suite reports.

use thiserror::Error;

use crate::extended_sa::ExtendedError;
use crate::matrix_core::LinalgError;
use crate::perspectives_means::PerspectiveError;
use crate::pw_calculus::PwError;
use crate::scalar_functions::FunctionError;

pub mod candidate;
pub mod checks;
pub mod generators;
pub mod report;
pub mod suites;

pub use candidate::{Candidate, Orientation};
pub use checks::{Check, Relation};
pub use generators::{gen_pair, Profile, RandomSpec};
pub use report::{replay, FailureRecord, ReplayOutcome, SuiteReport};
pub use suites::{run_suite, SuiteKind};

#[derive(Debug, Error)]
pub enum SuiteError {
    #[error("candidate `{name}` could not be evaluated: {message}")]
    Candidate { name: String, message: String },
    #[error("unknown suite `{0}`")]
    UnknownSuite(String),
    #[error("malformed failure record: {0}")]
    Record(String),
    #[error(transparent)]
    Perspective(#[from] PerspectiveError),
    #[error(transparent)]
    Pw(#[from] PwError),
    #[error(transparent)]
    Function(#[from] FunctionError),
    #[error(transparent)]
    Extended(#[from] ExtendedError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}
