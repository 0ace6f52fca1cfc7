//! Synthetic banks and ledgers of known composition, for tests, benchmarks
//! and demonstrations of the analysis pipeline without live endpoints.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::constraint::{CheckerConfig, ConditionSpec, Validator};
use crate::extraction::{extract_answer, Answer, AnswerFormat, Outcome};
use crate::runner::{
    score_response, Difficulty, ModelEndpoint, TaskItem, TaskType, TrialKey, TrialRecord, TrialStatus,
};

pub const CONDITIONS: [&str; 3] = ["control", "no_have", "e_prime"];
pub const MODELS: [&str; 3] = ["haiku", "gemini", "gpt"];

/// Items per task in the reference bank (130 total).
pub const TASK_ITEMS: [(TaskType, usize); 7] = [
    (TaskType::Syllogisms, 20),
    (TaskType::CausalReasoning, 15),
    (TaskType::AnalogicalReasoning, 20),
    (TaskType::Classification, 20),
    (TaskType::EpistemicCalibration, 20),
    (TaskType::EthicalDilemmas, 15),
    (TaskType::MathWordProblems, 20),
];

/// Per-task `(scoreable, correct)` for control, no_have and e_prime, pooled
/// over models. Consistent with the reference accuracy table and the
/// 4,344-trial total.
pub const POOLED_COUNTS: [(TaskType, [(usize, usize); 3]); 7] = [
    (TaskType::EthicalDilemmas, [(175, 134), (160, 153), (139, 128)]),
    (TaskType::Classification, [(230, 214), (240, 239), (182, 175)]),
    (TaskType::EpistemicCalibration, [(230, 158), (230, 175), (208, 131)]),
    (TaskType::CausalReasoning, [(180, 138), (168, 137), (174, 158)]),
    (TaskType::MathWordProblems, [(239, 221), (231, 217), (237, 220)]),
    (TaskType::AnalogicalReasoning, [(223, 170), (211, 158), (239, 175)]),
    (TaskType::Syllogisms, [(204, 204), (240, 235), (204, 197)]),
];

/// Mean word counts per task for control, e_prime and no_have.
pub const WORD_COUNT_MEANS: [(TaskType, [usize; 3]); 7] = [
    (TaskType::Classification, [407, 273, 262]),
    (TaskType::CausalReasoning, [570, 396, 384]),
    (TaskType::EthicalDilemmas, [557, 437, 420]),
    (TaskType::Syllogisms, [308, 240, 227]),
    (TaskType::EpistemicCalibration, [541, 439, 416]),
    (TaskType::AnalogicalReasoning, [366, 308, 303]),
    (TaskType::MathWordProblems, [182, 178, 178]),
];

pub fn format_for(task: TaskType) -> AnswerFormat {
    if task == TaskType::Syllogisms {
        AnswerFormat::ValidInvalid
    } else {
        AnswerFormat::Letter4
    }
}

fn truth_for(format: AnswerFormat) -> Answer {
    match format {
        AnswerFormat::Letter4 => Answer::B,
        AnswerFormat::ValidInvalid => Answer::Valid,
    }
}

fn wrong_for(format: AnswerFormat) -> Answer {
    match format {
        AnswerFormat::Letter4 => Answer::C,
        AnswerFormat::ValidInvalid => Answer::Invalid,
    }
}

/// 130 placeholder items with the reference per-task composition.
pub fn reference_bank() -> Vec<TaskItem> {
    let mut bank = Vec::new();
    for (task, count) in TASK_ITEMS {
        let format = format_for(task);
        for i in 0..count {
            bank.push(TaskItem {
                id: format!("{}-{:02}", task.as_str(), i + 1),
                task_type: task,
                difficulty: [Difficulty::Easy, Difficulty::Medium, Difficulty::Hard][i % 3],
                prompt: format!("Placeholder {} question {}.", task.label().to_lowercase(), i + 1),
                options: match format {
                    AnswerFormat::Letter4 => ["first", "second", "third", "fourth"].map(String::from).to_vec(),
                    AnswerFormat::ValidInvalid => Vec::new(),
                },
                truth: truth_for(format),
                format,
            });
        }
    }
    bank
}

pub fn reference_conditions() -> Vec<ConditionSpec> {
    vec![
        ConditionSpec::new("control", "Answer carefully.", Validator::None),
        ConditionSpec::new("no_have", "Avoid possessive have.", Validator::NoHave),
        ConditionSpec::new("e_prime", "Avoid to be.", Validator::EPrime),
    ]
}

pub fn reference_models() -> Vec<ModelEndpoint> {
    MODELS.iter().map(|m| ModelEndpoint::new(m, "http://127.0.0.1:9/v1", "SYNTH_API_KEY")).collect()
}

/// A completed record whose answer line reports `answer`.
pub fn answered_record(key: TrialKey, task: TaskType, answer: Answer, word_count: usize) -> TrialRecord {
    let text = format!("Answer: {answer}");
    let format = format_for(task);
    let mut rec = TrialRecord::failed(key, task, TrialStatus::Ok, String::new(), 1);
    rec.extraction = extract_answer(&text, format);
    rec.outcome = if answer == truth_for(format) { Outcome::Correct } else { Outcome::Incorrect };
    rec.response = Some(text);
    rec.error = None;
    rec.word_count = word_count;
    rec
}

fn key(item_id: String, condition: &str, model: &str, repetition: u32) -> TrialKey {
    TrialKey { item_id, condition: condition.to_owned(), model: model.to_owned(), repetition }
}

/// Scoreable records reproducing `POOLED_COUNTS`, spread round-robin over
/// the three models.
pub fn pooled_ledger() -> Vec<TrialRecord> {
    let mut out = Vec::new();
    for (task, cells) in POOLED_COUNTS {
        let format = format_for(task);
        for (condition, (n, correct)) in CONDITIONS.iter().zip(cells) {
            for i in 0..n {
                let answer = if i < correct { truth_for(format) } else { wrong_for(format) };
                let k = key(format!("{}-{i:04}", task.as_str()), condition, MODELS[i % 3], 0);
                out.push(answered_record(k, task, answer, 0));
            }
        }
    }
    out
}

/// One record per task and condition carrying the reference mean word count.
pub fn word_count_ledger() -> Vec<TrialRecord> {
    let order = ["control", "e_prime", "no_have"];
    let mut out = Vec::new();
    for (task, means) in WORD_COUNT_MEANS {
        for (condition, words) in order.iter().zip(means) {
            let k = key(format!("{}-01", task.as_str()), condition, MODELS[0], 0);
            out.push(answered_record(k, task, truth_for(format_for(task)), words));
        }
    }
    out
}

/// Failure counts injected into the full reference grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Injection {
    pub transport_errors: usize,
    pub timeouts: usize,
    /// Completed trials with a blank response.
    pub blank: usize,
    /// Completed trials whose text carries no extractable answer.
    pub no_match: usize,
}

impl Default for Injection {
    fn default() -> Self {
        Injection { transport_errors: 30, timeouts: 180, blank: 41, no_match: 85 }
    }
}

/// The full 130 × 3 × 3 × 4 grid, scored through the real pipeline, with
/// failures injected at seeded positions.
pub fn accounting_ledger(inject: Injection, seed: u64) -> Vec<TrialRecord> {
    let bank = reference_bank();
    let conditions = reference_conditions();
    let plan = crate::runner::plan_trials(&bank, &conditions, &reference_models(), 4).expect("reference grid is valid");
    let mut idx: Vec<usize> = (0..plan.len()).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut kind = vec![0u8; plan.len()];
    let mut cursor = 0;
    for (tag, count) in [(1u8, inject.transport_errors), (2, inject.timeouts), (3, inject.blank), (4, inject.no_match)]
    {
        for &i in &idx[cursor..cursor + count] {
            kind[i] = tag;
        }
        cursor += count;
    }
    let items: std::collections::HashMap<&str, &TaskItem> = bank.iter().map(|i| (i.id.as_str(), i)).collect();
    let checker = CheckerConfig::default();
    plan.into_iter()
        .zip(kind)
        .map(|(k, tag)| {
            let item = items[k.item_id.as_str()];
            let cond = conditions.iter().find(|c| c.name == k.condition).expect("planned condition");
            let text = match tag {
                1 => return TrialRecord::failed(k, item.task_type, TrialStatus::TransportError, "HTTP 503".into(), 5),
                2 => return TrialRecord::failed(k, item.task_type, TrialStatus::Timeout, "timed out".into(), 120_000),
                3 => "   ".to_owned(),
                4 => "The considerations pull in different directions here.".to_owned(),
                _ if k.repetition % 2 == 0 => format!("Answer: {}", item.truth),
                _ => format!("Answer: {}", wrong_for(item.format)),
            };
            score_response(k, item, cond, text, 10, &checker).expect("reference items score")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bank_composition() {
        let bank = reference_bank();
        assert_eq!(bank.len(), 130);
        crate::runner::check_bank(&bank).unwrap();
    }

    #[test]
    fn pooled_totals() {
        let ledger = pooled_ledger();
        assert_eq!(ledger.len(), 4344);
        assert!(ledger.iter().all(|r| r.is_scoreable()));
    }

    #[test]
    fn accounting_grid_has_unique_keys() {
        let ledger = accounting_ledger(Injection::default(), 1);
        let keys: std::collections::HashSet<_> = ledger.iter().map(|r| &r.key).collect();
        assert_eq!(keys.len(), 4680);
    }
}
