use serde::Deserialize;
use umwelt_core::extraction::ExtractionRule;
use umwelt_core::{check_eprime, check_nohave, extract_answer, Answer, AnswerFormat};

#[derive(Deserialize)]
struct ConstraintCase {
    category: String,
    text: String,
    e_prime: usize,
    no_have: usize,
}

#[derive(Deserialize)]
struct ExtractionCase {
    response: String,
    format: AnswerFormat,
    expected: Option<Answer>,
    tier: ExtractionRule,
}

fn lines<T: for<'de> Deserialize<'de>>(raw: &str) -> Vec<T> {
    raw.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).unwrap_or_else(|e| panic!("{e}: {l}")))
        .collect()
}

#[test]
fn constraint_corpus_labels() {
    let cases: Vec<ConstraintCase> = lines(include_str!("../data/constraint_corpus.jsonl"));
    assert_eq!(cases.len(), 60);
    let mut misses = Vec::new();
    for c in &cases {
        let ep = check_eprime(&c.text).count;
        let nh = check_nohave(&c.text).count;
        if ep != c.e_prime || nh != c.no_have {
            misses.push(format!(
                "[{}] {:?}: e_prime {ep} (want {}), no_have {nh} (want {})",
                c.category, c.text, c.e_prime, c.no_have
            ));
        }
    }
    assert!(misses.is_empty(), "{}", misses.join("\n"));
}

#[test]
fn extraction_corpus_labels() {
    let cases: Vec<ExtractionCase> = lines(include_str!("../data/extraction_corpus.jsonl"));
    assert_eq!(cases.len(), 40);
    let mut misses = Vec::new();
    for c in &cases {
        let got = extract_answer(&c.response, c.format);
        if got.answer != c.expected || got.rule != c.tier {
            misses.push(format!("[{:?}] {:?}: got {:?} via {:?}", c.tier, c.response, got.answer, got.rule));
        }
    }
    assert!(misses.is_empty(), "{}", misses.join("\n"));
}
