//! Per-response text metrics stored on every trial record.

use once_cell::sync::Lazy;
use regex::Regex;
use serde::{Deserialize, Serialize};

static NUMBERED_LINE: Lazy<Regex> = Lazy::new(|| Regex::new(r"(?m)^[ \t]*\d+[.):](?:\s|$)").unwrap());
static STEP_TOKEN: Lazy<Regex> = Lazy::new(|| Regex::new(r"(?i)\bstep\s+\d+\b").unwrap());
static SENTENCE_END: Lazy<Regex> = Lazy::new(|| Regex::new(r"[.!?]+(?:\s+|$)|\n").unwrap());

pub const DEFAULT_GROUNDING_MARKERS: &[&str] =
    &["because", "since", "given", "evidence", "observed", "according", "implies", "therefore"];

/// Counts numbered lines plus `step N` tokens.
pub fn chain_depth(text: &str) -> usize {
    NUMBERED_LINE.find_iter(text).count() + STEP_TOKEN.find_iter(text).count()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Specificity {
    pub grounded: usize,
    pub bare: usize,
}

pub fn epistemic_specificity(text: &str) -> Specificity {
    epistemic_specificity_with(text, DEFAULT_GROUNDING_MARKERS)
}

/// Splits on terminal punctuation and newlines. Questions are neither
/// grounded nor bare.
pub fn epistemic_specificity_with<S: AsRef<str>>(text: &str, markers: &[S]) -> Specificity {
    let mut out = Specificity::default();
    let mut start = 0;
    let mut pieces = Vec::new();
    for m in SENTENCE_END.find_iter(text) {
        pieces.push(&text[start..m.end()]);
        start = m.end();
    }
    pieces.push(&text[start..]);
    for sentence in pieces.into_iter().map(str::trim).filter(|s| !s.is_empty()) {
        if sentence.ends_with('?') {
            continue;
        }
        if !sentence.chars().any(char::is_alphanumeric) {
            continue;
        }
        let lowered = sentence.to_lowercase();
        let grounded = lowered.split(|c: char| !c.is_alphanumeric()).any(|w| markers.iter().any(|m| m.as_ref() == w));
        if grounded {
            out.grounded += 1;
        } else {
            out.bare += 1;
        }
    }
    out
}
