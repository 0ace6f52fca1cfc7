//! Trial grid planning and execution.
//!
//! A run plans the full (item, condition, model, repetition) grid, drops
//! keys the ledger already holds, and executes the rest with a bounded
//! number of requests in flight. Records reach the ledger through a single
//! writer and are synced before the next one is accepted, so a crash loses
//! at most the trials that were still in flight.

mod config;
mod endpoint;
mod ledger;
mod metrics;
pub mod mock;
mod record;
mod task;

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use chrono::Utc;
use futures::StreamExt;
use serde::{Deserialize, Serialize};

pub use config::{Experiment, ExperimentConfig};
pub use endpoint::{
    CallFailure, ChatClient, ChatReply, ChatRequest, ModelEndpoint, Protocol, RetryPolicy, DEFAULT_MAX_OUTPUT_TOKENS,
};
pub use ledger::{
    quarantine_corrupt, quarantine_path, read_ledger, resume_filter, LedgerSnapshot, LedgerWriter, ResumePlan,
};
pub use metrics::{
    chain_depth, epistemic_specificity, epistemic_specificity_with, Specificity, DEFAULT_GROUNDING_MARKERS,
};
pub use record::{TrialKey, TrialRecord, TrialStatus, DETERMINISTIC_TEMPERATURE, SAMPLED_TEMPERATURE};
pub use task::{check_bank, load_bank, Difficulty, TaskItem, TaskType};

use crate::constraint::{validate_with, word_count, CheckerConfig, ConditionSpec};
use crate::error::{Error, Result};
use crate::extraction::{extract_answer, score_trial};

/// Full grid in (item, condition, model, repetition) order.
pub fn plan_trials(
    bank: &[TaskItem],
    conditions: &[ConditionSpec],
    models: &[ModelEndpoint],
    reps: u32,
) -> Result<Vec<TrialKey>> {
    if reps == 0 {
        return Err(Error::Config("repetitions must be at least 1".into()));
    }
    if bank.is_empty() || conditions.is_empty() || models.is_empty() {
        return Err(Error::Config("bank, conditions and models must be non-empty".into()));
    }
    check_bank(bank)?;
    let mut keys = Vec::with_capacity(bank.len() * conditions.len() * models.len() * reps as usize);
    for item in bank {
        for cond in conditions {
            for model in models {
                for repetition in 0..reps {
                    keys.push(TrialKey {
                        item_id: item.id.clone(),
                        condition: cond.name.clone(),
                        model: model.name.clone(),
                        repetition,
                    });
                }
            }
        }
    }
    Ok(keys)
}

/// Fills a record from a successful response.
pub fn score_response(
    key: TrialKey,
    item: &TaskItem,
    condition: &ConditionSpec,
    response: String,
    latency_ms: u64,
    checker: &CheckerConfig,
) -> Result<TrialRecord> {
    let extraction = extract_answer(&response, item.format);
    let outcome = score_trial(&extraction, item.truth, item.format)?;
    let violations = validate_with(condition.validator, &response, checker).count;
    let spec = epistemic_specificity(&response);
    Ok(TrialRecord {
        temperature: key.temperature(),
        key,
        task_type: item.task_type,
        status: TrialStatus::Ok,
        outcome,
        violations,
        word_count: word_count(&response),
        chain_depth: chain_depth(&response),
        grounded: spec.grounded,
        bare: spec.bare,
        extraction,
        latency_ms,
        timestamp: Utc::now(),
        response: Some(response),
        error: None,
    })
}

/// Runs one trial end to end. Transport failures become error-status
/// records; only abort-class failures (rejected credentials) return `Err`.
pub async fn execute_trial(
    key: TrialKey,
    item: &TaskItem,
    condition: &ConditionSpec,
    client: &ChatClient,
    checker: &CheckerConfig,
) -> Result<TrialRecord> {
    let request = ChatRequest {
        system: condition.system_prompt.clone(),
        user: item.user_message(),
        temperature: key.temperature(),
    };
    match client.complete(&request).await? {
        Ok(reply) => score_response(key, item, condition, reply.text, reply.latency_ms, checker),
        Err((CallFailure::Timeout(msg), ms)) => {
            Ok(TrialRecord::failed(key, item.task_type, TrialStatus::Timeout, msg, ms))
        }
        Err((CallFailure::Transport(msg), ms)) => {
            Ok(TrialRecord::failed(key, item.task_type, TrialStatus::TransportError, msg, ms))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Progress {
    pub written: usize,
    pub to_run: usize,
}

pub type ProgressFn = Arc<dyn Fn(Progress) + Send + Sync>;

#[derive(Clone, Default)]
pub struct RunOptions {
    /// Stop accepting results after this many new records, dropping
    /// whatever is still in flight. Used for crash-injection tests.
    pub stop_after: Option<usize>,
    pub progress: Option<ProgressFn>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RunSummary {
    pub planned: usize,
    /// Keys with an ok record.
    pub completed: usize,
    /// Keys whose latest record is a failure.
    pub errors: usize,
    /// Completed keys without an extractable answer.
    pub unscored: usize,
    /// Records appended by this invocation.
    pub executed: usize,
    pub quarantined: usize,
}

/// Reconciles a plan against ledger contents.
pub fn summarize(plan: &[TrialKey], snapshot: &LedgerSnapshot) -> RunSummary {
    let planned: HashSet<&TrialKey> = plan.iter().collect();
    let mut s = RunSummary { planned: plan.len(), ..RunSummary::default() };
    for rec in snapshot.latest().into_iter().filter(|r| planned.contains(&r.key)) {
        if rec.is_ok() {
            s.completed += 1;
            if rec.outcome == crate::extraction::Outcome::Unscored {
                s.unscored += 1;
            }
        } else {
            s.errors += 1;
        }
    }
    s
}

pub async fn run_experiment(exp: &Experiment, opts: &RunOptions) -> Result<RunSummary> {
    let plan = plan_trials(&exp.bank, &exp.conditions, &exp.models, exp.reps)?;
    let clients: HashMap<&str, ChatClient> =
        exp.models.iter().map(|m| Ok((m.name.as_str(), ChatClient::new(m, exp.retry)?))).collect::<Result<_>>()?;
    let resume = resume_filter(&plan, &exp.ledger_path, exp.requeue_errors)?;
    let items: HashMap<&str, &TaskItem> = exp.bank.iter().map(|i| (i.id.as_str(), i)).collect();
    let conditions: HashMap<&str, &ConditionSpec> = exp.conditions.iter().map(|c| (c.name.as_str(), c)).collect();

    let to_run = resume.remaining.len();
    let mut writer = LedgerWriter::open(&exp.ledger_path)?;
    let checker = &exp.checker;
    let mut results = futures::stream::iter(resume.remaining.into_iter().map(|key| {
        let item = items[key.item_id.as_str()];
        let condition = conditions[key.condition.as_str()];
        let client = &clients[key.model.as_str()];
        execute_trial(key, item, condition, client, checker)
    }))
    .buffer_unordered(exp.concurrency.max(1));

    let mut written = 0;
    while let Some(record) = results.next().await {
        let record = record?;
        writer.append(&record)?;
        written += 1;
        if let Some(progress) = &opts.progress {
            progress(Progress { written, to_run });
        }
        if opts.stop_after.is_some_and(|n| written >= n) {
            break;
        }
    }
    drop(results);

    let mut summary = summarize(&plan, &read_ledger(&exp.ledger_path)?);
    summary.executed = written;
    summary.quarantined = resume.quarantined;
    Ok(summary)
}
