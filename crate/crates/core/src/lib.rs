//! Tools for running and analysing constrained-language reasoning
//! experiments: vocabulary-constraint checkers, answer extraction, a
//! resumable trial runner, the accuracy statistics, and ensemble coverage
//! analysis.

pub mod constraint;
pub mod ensemble;
pub mod error;
pub mod extraction;
pub mod runner;
pub mod stats;
pub mod synth;

pub use constraint::{
    check_eprime, check_nohave, tokenize, validate, CheckerConfig, ConditionSpec, Registry, Validator, ViolationReport,
};
pub use ensemble::{CoverageMatrix, ShapleyResult};
pub use error::{Error, Result};
pub use extraction::{extract_answer, score_trial, Answer, AnswerFormat, Extraction, Outcome};
pub use runner::{plan_trials, run_experiment, TaskItem, TrialKey, TrialRecord};
