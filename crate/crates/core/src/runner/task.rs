use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extraction::{Answer, AnswerFormat};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskType {
    Syllogisms,
    CausalReasoning,
    AnalogicalReasoning,
    Classification,
    EpistemicCalibration,
    EthicalDilemmas,
    MathWordProblems,
}

impl TaskType {
    pub const ALL: [TaskType; 7] = [
        TaskType::Syllogisms,
        TaskType::CausalReasoning,
        TaskType::AnalogicalReasoning,
        TaskType::Classification,
        TaskType::EpistemicCalibration,
        TaskType::EthicalDilemmas,
        TaskType::MathWordProblems,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TaskType::Syllogisms => "syllogisms",
            TaskType::CausalReasoning => "causal_reasoning",
            TaskType::AnalogicalReasoning => "analogical_reasoning",
            TaskType::Classification => "classification",
            TaskType::EpistemicCalibration => "epistemic_calibration",
            TaskType::EthicalDilemmas => "ethical_dilemmas",
            TaskType::MathWordProblems => "math_word_problems",
        }
    }

    /// Human-readable label used in text tables.
    pub fn label(self) -> &'static str {
        match self {
            TaskType::Syllogisms => "Syllogisms",
            TaskType::CausalReasoning => "Causal reasoning",
            TaskType::AnalogicalReasoning => "Analogical reasoning",
            TaskType::Classification => "Classification",
            TaskType::EpistemicCalibration => "Epistemic calibration",
            TaskType::EthicalDilemmas => "Ethical dilemmas",
            TaskType::MathWordProblems => "Math word problems",
        }
    }
}

impl fmt::Display for TaskType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Difficulty {
    Easy,
    Medium,
    Hard,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskItem {
    pub id: String,
    pub task_type: TaskType,
    pub difficulty: Difficulty,
    pub prompt: String,
    pub options: Vec<String>,
    pub truth: Answer,
    pub format: AnswerFormat,
}

impl TaskItem {
    fn check(&self) -> Result<()> {
        if !self.format.allows(self.truth) {
            return Err(Error::Data(format!(
                "item {}: truth {} is not allowed by format {:?}",
                self.id, self.truth, self.format
            )));
        }
        if self.format == AnswerFormat::Letter4 && !self.options.is_empty() && self.options.len() != 4 {
            return Err(Error::Data(format!(
                "item {}: letter4 items carry exactly four options, found {}",
                self.id,
                self.options.len()
            )));
        }
        Ok(())
    }

    /// The user turn sent to the model: question, lettered options, and the
    /// requested answer line.
    pub fn user_message(&self) -> String {
        let mut msg = self.prompt.trim().to_string();
        if !self.options.is_empty() {
            msg.push_str("\n\n");
            for (label, option) in ["A", "B", "C", "D"].iter().zip(&self.options) {
                msg.push_str(&format!("{label}. {option}\n"));
            }
        }
        let instruction = match self.format {
            AnswerFormat::Letter4 => {
                "End your response with a final line of the form \"Answer: X\" where X is A, B, C, or D."
            }
            AnswerFormat::ValidInvalid => {
                "End your response with a final line of the form \"Answer: VALID\" or \"Answer: INVALID\"."
            }
        };
        msg.push('\n');
        msg.push_str(instruction);
        msg
    }
}

/// Checks ids are unique and every item is internally consistent.
pub fn check_bank(bank: &[TaskItem]) -> Result<()> {
    let mut seen = HashSet::new();
    for item in bank {
        if !seen.insert(item.id.as_str()) {
            return Err(Error::Data(format!("duplicate item id '{}'", item.id)));
        }
        item.check()?;
    }
    Ok(())
}

pub fn load_bank(path: &Path) -> Result<Vec<TaskItem>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let bank: Vec<TaskItem> = serde_json::from_str(&text)?;
    check_bank(&bank)?;
    Ok(bank)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn item(id: &str, truth: Answer, format: AnswerFormat) -> TaskItem {
        TaskItem {
            id: id.into(),
            task_type: TaskType::Classification,
            difficulty: Difficulty::Easy,
            prompt: "Which one?".into(),
            options: vec!["w".into(), "x".into(), "y".into(), "z".into()],
            truth,
            format,
        }
    }

    #[test]
    fn rejects_duplicates_and_bad_truth() {
        let a = item("a", Answer::B, AnswerFormat::Letter4);
        assert!(check_bank(&[a.clone(), a.clone()]).is_err());
        assert!(check_bank(&[item("v", Answer::B, AnswerFormat::ValidInvalid)]).is_err());
        assert!(check_bank(&[a]).is_ok());
    }

    #[test]
    fn user_message_lists_options() {
        let msg = item("a", Answer::B, AnswerFormat::Letter4).user_message();
        assert!(msg.contains("A. w\nB. x\nC. y\nD. z"));
        assert!(msg.ends_with("A, B, C, or D."));
    }
}
