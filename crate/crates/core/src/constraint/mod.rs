//! Vocabulary-constraint detection.
//!
//! Two checkers are provided: [`check_eprime`] flags every form of "to be"
//! and [`check_nohave`] flags "to have" used as a main verb while letting
//! auxiliary uses ("has completed") through. Both work on the token stream
//! from [`tokenize`] and never need a part-of-speech tagger.

mod lexicon;
mod registry;
mod tokenize;

use serde::{Deserialize, Serialize};

pub use lexicon::{is_past_participle, BE_FORMS, DEFAULT_SKIP_WORDS, DEFAULT_S_HEADS, HAVE_FORMS};
pub use registry::{AgentSpec, ConditionSpec, Registry, TaxonomyEntry};
pub use tokenize::{char_slice, tokenize, word_count, Token};

use crate::error::{Error, Result};

/// Which checker a condition is enforced by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Validator {
    None,
    EPrime,
    NoHave,
}

impl Validator {
    pub fn as_str(self) -> &'static str {
        match self {
            Validator::None => "none",
            Validator::EPrime => "e_prime",
            Validator::NoHave => "no_have",
        }
    }
}

impl std::str::FromStr for Validator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "none" | "control" => Ok(Validator::None),
            "e_prime" | "eprime" => Ok(Validator::EPrime),
            "no_have" | "nohave" => Ok(Validator::NoHave),
            other => Err(Error::Config(format!("unknown validator '{other}'"))),
        }
    }
}

impl std::fmt::Display for Validator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    /// Character offsets into the checked text.
    pub span: (usize, usize),
    pub matched_form: String,
    pub rule: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViolationReport {
    pub constraint: Validator,
    pub violations: Vec<Violation>,
    pub count: usize,
}

impl ViolationReport {
    fn new(constraint: Validator, violations: Vec<Violation>) -> Self {
        ViolationReport { constraint, count: violations.len(), violations }
    }

    pub fn empty(constraint: Validator) -> Self {
        Self::new(constraint, Vec::new())
    }

    pub fn is_clean(&self) -> bool {
        self.count == 0
    }
}

/// Tunables for the checkers. `Default` gives the shipped behaviour.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CheckerConfig {
    /// Heads on which `'s` is read as a copula.
    pub s_heads: Vec<String>,
    /// Adverbs and negations skippable between a have-form and a participle.
    pub skip_words: Vec<String>,
    /// Maximum number of skip words inside the auxiliary window.
    pub max_skips: usize,
    /// Ignore violations inside double quotation marks.
    pub exempt_quotes: bool,
}

impl Default for CheckerConfig {
    fn default() -> Self {
        CheckerConfig {
            s_heads: DEFAULT_S_HEADS.iter().map(|s| s.to_string()).collect(),
            skip_words: DEFAULT_SKIP_WORDS.iter().map(|s| s.to_string()).collect(),
            max_skips: 2,
            exempt_quotes: false,
        }
    }
}

fn violation(tok: &Token, rule: &str) -> Violation {
    Violation { span: (tok.start, tok.end), matched_form: tok.lower.clone(), rule: rule.to_string() }
}

/// Splits a contraction key such as `it's` into (`it`, `s`).
fn split_contraction(key: &str) -> Option<(&str, &str)> {
    key.find('\'').map(|i| (&key[..i], &key[i + 1..]))
}

/// Character ranges enclosed by paired double quotes.
fn quoted_ranges(text: &str) -> Vec<(usize, usize)> {
    let mut ranges = Vec::new();
    let mut open: Option<usize> = None;
    for (i, c) in text.chars().enumerate() {
        match (c, open) {
            ('"', None) | ('\u{201C}', None) => open = Some(i),
            ('"', Some(s)) | ('\u{201D}', Some(s)) => {
                ranges.push((s, i));
                open = None;
            }
            _ => {}
        }
    }
    ranges
}

fn filter_quotes(text: &str, cfg: &CheckerConfig, violations: Vec<Violation>) -> Vec<Violation> {
    if !cfg.exempt_quotes {
        return violations;
    }
    let ranges = quoted_ranges(text);
    violations.into_iter().filter(|v| !ranges.iter().any(|&(s, e)| v.span.0 > s && v.span.1 <= e)).collect()
}

pub fn check_eprime(text: &str) -> ViolationReport {
    check_eprime_with(text, &CheckerConfig::default())
}

pub fn check_eprime_with(text: &str, cfg: &CheckerConfig) -> ViolationReport {
    let mut found = Vec::new();
    for tok in tokenize(text).iter().filter(|t| t.is_word) {
        let key = tok.key();
        let rule = if BE_FORMS.contains(&key.as_str()) {
            Some("be_form")
        } else if lexicon::NEGATED_BE.contains(&key.as_str()) {
            Some("negated_be")
        } else if let Some((head, suffix)) = split_contraction(&key) {
            match suffix {
                "m" => Some("contraction_m"),
                "re" => Some("contraction_re"),
                "s" if cfg.s_heads.iter().any(|h| h == head) => Some("contraction_s"),
                _ => None,
            }
        } else {
            None
        };
        if let Some(rule) = rule {
            found.push(violation(tok, rule));
        }
    }
    ViolationReport::new(Validator::EPrime, filter_quotes(text, cfg, found))
}

pub fn check_nohave(text: &str) -> ViolationReport {
    check_nohave_with(text, &CheckerConfig::default())
}

enum HaveKind {
    Plain,
    Negated,
    Ve,
    D,
}

fn have_kind(key: &str) -> Option<HaveKind> {
    if HAVE_FORMS.contains(&key) {
        return Some(HaveKind::Plain);
    }
    if lexicon::NEGATED_HAVE.contains(&key) {
        return Some(HaveKind::Negated);
    }
    match split_contraction(key) {
        Some((head, "ve")) if !head.is_empty() => Some(HaveKind::Ve),
        Some((head, "d")) if !head.is_empty() => Some(HaveKind::D),
        _ => None,
    }
}

/// The first word after position `idx` that is not a skip word, provided no
/// more than `max_skips` skip words precede it and no clause boundary
/// intervenes.
fn next_content_word<'a>(tokens: &'a [Token], idx: usize, cfg: &CheckerConfig) -> Option<&'a Token> {
    let mut skips = 0;
    for tok in &tokens[idx + 1..] {
        if !tok.is_word {
            if matches!(tok.surface.as_str(), "." | "!" | "?" | ";" | ":") {
                return None;
            }
            continue;
        }
        let key = tok.key();
        if cfg.skip_words.contains(&key) {
            skips += 1;
            if skips > cfg.max_skips {
                return None;
            }
            continue;
        }
        return Some(tok);
    }
    None
}

pub fn check_nohave_with(text: &str, cfg: &CheckerConfig) -> ViolationReport {
    let tokens = tokenize(text);
    let mut found = Vec::new();
    for (i, tok) in tokens.iter().enumerate().filter(|(_, t)| t.is_word) {
        let key = tok.key();
        let Some(kind) = have_kind(&key) else { continue };
        let next = next_content_word(&tokens, i, cfg).map(Token::key);
        let auxiliary = next.as_deref().is_some_and(is_past_participle);
        if auxiliary {
            continue;
        }
        let rule = match kind {
            HaveKind::Plain => "have_main_verb",
            HaveKind::Negated => "negated_have",
            HaveKind::Ve => "contraction_ve",
            HaveKind::D => {
                // `'d` reads as "would" unless a noun phrase follows.
                if !next.as_deref().is_some_and(lexicon::is_np_opener) {
                    continue;
                }
                "contraction_d"
            }
        };
        found.push(violation(tok, rule));
    }
    ViolationReport::new(Validator::NoHave, filter_quotes(text, cfg, found))
}

/// Runs the checker named by the condition.
pub fn validate(condition: &ConditionSpec, text: &str) -> ViolationReport {
    validate_with(condition.validator, text, &CheckerConfig::default())
}

pub fn validate_with(validator: Validator, text: &str, cfg: &CheckerConfig) -> ViolationReport {
    match validator {
        Validator::None => ViolationReport::empty(Validator::None),
        Validator::EPrime => check_eprime_with(text, cfg),
        Validator::NoHave => check_nohave_with(text, cfg),
    }
}

/// Parses a validator identifier from configuration.
pub fn validator_from_id(id: &str) -> Result<Validator> {
    id.parse()
}
