//! Statistical verification of simulated and exact results.
//!
//! Every check produces [`CheckReport`]s. Monte Carlo checks compare an
//! estimate with its target through `z = (estimate − target) / stderr`;
//! exact checks compare rationals or counts without tolerance and report a
//! standard error of 0.

mod exact_law;
mod geometric;
mod jump_chain;
mod mcs;
mod nonmarkov;
mod report;
mod suite;
mod worked_example;

use thiserror::Error;

use crate::dirac_exact::ExactError;
use crate::engine::EngineError;

pub use exact_law::{exact_law_reports, tv_distance, ExactLawConfig, TV_BOUND};
pub use geometric::{geometric_fit, sample_c, sample_next_merge_gap, GofReport, MIN_EXPECTED};
pub use mcs::{mcs_convergence, mcs_records, mcs_reports, McsRecord, McsRow};
pub use nonmarkov::{
    closed_form, dirac_rates, nonmarkov_atom, nonmarkov_closed_form, nonmarkov_closed_form_derived, nonmarkov_mc,
    t0_dependence_reports, ClosedForm, NonMarkovCounts, NonMarkovValues, Times, MIN_GAP, MIN_HITS,
};
pub use report::{proportion, reports_to_csv, reports_to_json, CheckReport, Rule, SampleStats, DEFAULT_ZMAX};
pub use worked_example::{worked_example_counts, worked_example_check, WorkedExampleCounts};
pub use suite::{run_verify, VerifyConfig};
pub use jump_chain::{correlation, fixed_time_check, jump_time_check, moment_check, stick_correlation_check, JumpChainSample};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Exact(#[from] ExactError),
    #[error("only {hits} conditioning hits for {what}; need at least {MIN_HITS}")]
    InsufficientHits { what: String, hits: u64 },
    #[error("no samples")]
    EmptySamples,
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
