use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::task::TaskType;
use crate::extraction::{Extraction, Outcome};

/// Repetition 0 runs deterministically; later repetitions sample.
pub const DETERMINISTIC_TEMPERATURE: f64 = 0.0;
pub const SAMPLED_TEMPERATURE: f64 = 0.7;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TrialKey {
    pub item_id: String,
    pub condition: String,
    pub model: String,
    pub repetition: u32,
}

impl TrialKey {
    pub fn temperature(&self) -> f64 {
        if self.repetition == 0 {
            DETERMINISTIC_TEMPERATURE
        } else {
            SAMPLED_TEMPERATURE
        }
    }
}

impl fmt::Display for TrialKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}/{}", self.item_id, self.condition, self.model, self.repetition)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialStatus {
    Ok,
    TransportError,
    Timeout,
}

/// One ledger line. Field names are part of the on-disk format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub key: TrialKey,
    pub task_type: TaskType,
    pub temperature: f64,
    pub response: Option<String>,
    pub status: TrialStatus,
    pub extraction: Extraction,
    pub outcome: Outcome,
    pub violations: usize,
    pub word_count: usize,
    pub chain_depth: usize,
    pub grounded: usize,
    pub bare: usize,
    pub latency_ms: u64,
    pub timestamp: DateTime<Utc>,
    /// Error detail for failed trials.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl TrialRecord {
    pub fn is_ok(&self) -> bool {
        self.status == TrialStatus::Ok
    }

    /// Completed with non-blank text to extract from.
    pub fn is_parseable(&self) -> bool {
        self.is_ok() && self.response.as_deref().is_some_and(|r| !r.trim().is_empty())
    }

    pub fn is_scoreable(&self) -> bool {
        self.is_parseable() && self.outcome != Outcome::Unscored
    }

    pub fn failed(key: TrialKey, task_type: TaskType, status: TrialStatus, error: String, latency_ms: u64) -> Self {
        TrialRecord {
            temperature: key.temperature(),
            key,
            task_type,
            response: None,
            status,
            extraction: Extraction::no_match(),
            outcome: Outcome::Unscored,
            violations: 0,
            word_count: 0,
            chain_depth: 0,
            grounded: 0,
            bare: 0,
            latency_ms,
            timestamp: Utc::now(),
            error: Some(error),
        }
    }
}
