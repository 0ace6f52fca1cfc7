//! Final-answer extraction from free-form responses.
//!
//! Patterns are grouped into tiers tried from strongest to weakest evidence:
//!
//! 1. explicit marker (`Answer: C`, `Final answer B`)
//! 2. boxed notation (`\boxed{B}`)
//! 3. option phrasing (`Option B`, `choice (c)`)
//! 4. relational phrasing (`the answer lies in B`, `resides in B`)
//! 5. a bare allowed answer on the last non-empty line
//!
//! The first tier with any match decides; inside a tier the match nearest the
//! end of the response wins, since models often revise before committing.

use std::fmt;
use std::str::FromStr;

use once_cell::sync::Lazy;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Answer {
    A,
    B,
    C,
    D,
    #[serde(rename = "VALID")]
    Valid,
    #[serde(rename = "INVALID")]
    Invalid,
}

impl Answer {
    pub fn as_str(self) -> &'static str {
        match self {
            Answer::A => "A",
            Answer::B => "B",
            Answer::C => "C",
            Answer::D => "D",
            Answer::Valid => "VALID",
            Answer::Invalid => "INVALID",
        }
    }
}

impl fmt::Display for Answer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Answer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let folded: String = s.split_whitespace().collect::<Vec<_>>().join(" ").to_ascii_uppercase();
        match folded.as_str() {
            "A" => Ok(Answer::A),
            "B" => Ok(Answer::B),
            "C" => Ok(Answer::C),
            "D" => Ok(Answer::D),
            "VALID" => Ok(Answer::Valid),
            "INVALID" | "NOT VALID" => Ok(Answer::Invalid),
            _ => Err(Error::Data(format!("'{s}' is not a canonical answer"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnswerFormat {
    Letter4,
    ValidInvalid,
}

impl AnswerFormat {
    pub fn allowed(self) -> &'static [Answer] {
        match self {
            AnswerFormat::Letter4 => &[Answer::A, Answer::B, Answer::C, Answer::D],
            AnswerFormat::ValidInvalid => &[Answer::Valid, Answer::Invalid],
        }
    }

    pub fn allows(self, answer: Answer) -> bool {
        self.allowed().contains(&answer)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtractionRule {
    ExplicitMarker,
    Boxed,
    OptionPhrase,
    Relational,
    FinalLine,
    NoMatch,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Extraction {
    pub answer: Option<Answer>,
    pub rule: ExtractionRule,
    /// Character offset of the matched answer.
    pub location: Option<usize>,
}

impl Extraction {
    pub fn no_match() -> Self {
        Extraction { answer: None, rule: ExtractionRule::NoMatch, location: None }
    }

    pub fn is_match(&self) -> bool {
        self.answer.is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Correct,
    Incorrect,
    Unscored,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractorConfig {
    /// Map "not valid" to INVALID.
    pub negated_valid: bool,
}

impl Default for ExtractorConfig {
    fn default() -> Self {
        ExtractorConfig { negated_valid: true }
    }
}

fn re(pattern: &str) -> Regex {
    Regex::new(pattern).expect("static pattern compiles")
}

const MARKER: &str = r"(?i:\b(?:final\s+answer|answer|verdict))\**\s*(?:(?i:is)\s+|:\s*|=\s*|-\s*)?\**\s*";

static LETTER_TIERS: Lazy<Vec<(ExtractionRule, Vec<Regex>)>> = Lazy::new(|| {
    vec![
        (
            ExtractionRule::ExplicitMarker,
            vec![
                re(&format!(r"{MARKER}(?:(?i:option|choice)\s*)?\(?\**([A-D])\b")),
                re(r"(?i:\b(?:final\s+answer|answer))\**\s*:\s*\**\s*\(?([a-d])\b"),
            ],
        ),
        (ExtractionRule::Boxed, vec![re(r"\\boxed\{\s*(?:\\text(?:bf)?\{\s*)?\(?([A-Da-d])\)?\s*\}")]),
        (ExtractionRule::OptionPhrase, vec![re(r"(?i:\b(?:option|choice))\s*\(?\**([A-Da-d])\b")]),
        (
            ExtractionRule::Relational,
            vec![
                re(r"(?i:\b(?:lies|resides|rests|falls|lands)\s+(?:in|with|on))\s+\(?\**([A-D])\b"),
                re(r"(?i:\b(?:choose|select|pick|go\s+with|favou?r))\s+\(?\**([A-D])\b"),
            ],
        ),
    ]
});

const VERDICT: &str = r"(?i:(not\s+valid|invalid|valid))\b";

static VALID_TIERS: Lazy<Vec<(ExtractionRule, Vec<Regex>)>> = Lazy::new(|| {
    vec![
        (ExtractionRule::ExplicitMarker, vec![re(&format!("{MARKER}{VERDICT}"))]),
        (ExtractionRule::Boxed, vec![re(&format!(r"\\boxed\{{\s*(?:\\text(?:bf)?\{{\s*)?{VERDICT}\s*\}}"))]),
        (ExtractionRule::OptionPhrase, vec![re(&format!(r"(?i:\b(?:option|choice))\s*\**{VERDICT}"))]),
        (
            ExtractionRule::Relational,
            vec![
                re(&format!(r"(?i:\b(?:lies|resides|rests|falls|lands)\s+(?:in|with|on))\s+\**{VERDICT}")),
                re(&format!(
                    r"(?i:\b(?:argument|syllogism|reasoning|inference|conclusion|it)\s+(?:is|seems|appears|remains|proves|qualifies\s+as|counts\s+as|stands\s+as))\s+\**{VERDICT}"
                )),
            ],
        ),
    ]
});

static FINAL_LINE_LETTER: Lazy<Regex> = Lazy::new(|| re(r"\b([A-D])\b"));
static FINAL_LINE_VERDICT: Lazy<Regex> = Lazy::new(|| re(r"\b(NOT VALID|INVALID|VALID)\b"));

fn char_offset(text: &str, byte: usize) -> usize {
    text[..byte].chars().count()
}

fn canonical(raw: &str, cfg: &ExtractorConfig) -> Option<Answer> {
    let folded = raw.split_whitespace().collect::<Vec<_>>().join(" ").to_ascii_uppercase();
    if folded == "NOT VALID" && !cfg.negated_valid {
        return Some(Answer::Valid);
    }
    folded.parse().ok()
}

fn last_match(text: &str, patterns: &[Regex], cfg: &ExtractorConfig) -> Option<(usize, Answer)> {
    let mut best: Option<(usize, Answer)> = None;
    for pattern in patterns {
        for caps in pattern.captures_iter(text) {
            let m = caps.get(1).expect("pattern has one group");
            let Some(answer) = canonical(m.as_str(), cfg) else { continue };
            if best.is_none_or(|(pos, _)| m.start() >= pos) {
                best = Some((m.start(), answer));
            }
        }
    }
    best
}

/// Whether an `A` token at `start` reads as the article ("A careful reading").
fn is_article(line: &str, start: usize) -> bool {
    let rest = &line[start + 1..];
    let mut chars = rest.chars();
    chars.next() == Some(' ') && chars.next().is_some_and(char::is_lowercase)
}

fn final_line(text: &str, format: AnswerFormat, cfg: &ExtractorConfig) -> Option<(usize, Answer)> {
    let line_start = text.trim_end().rfind('\n').map(|i| i + 1).unwrap_or(0);
    let line = text[line_start..].trim_end();
    if line.trim().is_empty() {
        return None;
    }
    match format {
        AnswerFormat::Letter4 => FINAL_LINE_LETTER
            .captures_iter(line)
            .filter_map(|c| c.get(1))
            .filter(|m| !(m.as_str() == "A" && is_article(line, m.start())))
            .last()
            .and_then(|m| Some((line_start + m.start(), canonical(m.as_str(), cfg)?))),
        AnswerFormat::ValidInvalid => {
            let bare: String = line.chars().filter(|c| c.is_alphanumeric() || c.is_whitespace()).collect();
            let bare = bare.trim();
            let upper = line.to_ascii_uppercase();
            if matches!(bare.to_ascii_lowercase().as_str(), "valid" | "invalid" | "not valid") {
                let offset = upper.find(&bare.to_ascii_uppercase()).unwrap_or(0);
                return Some((line_start + offset, canonical(bare, cfg)?));
            }
            FINAL_LINE_VERDICT
                .captures_iter(line)
                .filter_map(|c| c.get(1))
                .last()
                .and_then(|m| Some((line_start + m.start(), canonical(m.as_str(), cfg)?)))
        }
    }
}

pub fn extract_answer(response: &str, format: AnswerFormat) -> Extraction {
    extract_answer_with(response, format, &ExtractorConfig::default())
}

pub fn extract_answer_with(response: &str, format: AnswerFormat, cfg: &ExtractorConfig) -> Extraction {
    let tiers = match format {
        AnswerFormat::Letter4 => &*LETTER_TIERS,
        AnswerFormat::ValidInvalid => &*VALID_TIERS,
    };
    let found = tiers
        .iter()
        .find_map(|(rule, patterns)| last_match(response, patterns, cfg).map(|hit| (*rule, hit)))
        .or_else(|| final_line(response, format, cfg).map(|hit| (ExtractionRule::FinalLine, hit)));
    match found {
        Some((rule, (byte, answer))) if format.allows(answer) => {
            Extraction { answer: Some(answer), rule, location: Some(char_offset(response, byte)) }
        }
        _ => Extraction::no_match(),
    }
}

/// Scores an extraction against ground truth. No match is unscored, never wrong.
pub fn score_trial(extraction: &Extraction, truth: Answer, format: AnswerFormat) -> Result<Outcome> {
    if !format.allows(truth) {
        return Err(Error::Data(format!("truth {truth} is outside the {format:?} answer set")));
    }
    Ok(match extraction.answer {
        None => Outcome::Unscored,
        Some(a) if a == truth => Outcome::Correct,
        Some(_) => Outcome::Incorrect,
    })
}
