//! Word lists used by the checkers.

use std::collections::HashSet;

use once_cell::sync::Lazy;

pub const BE_FORMS: &[&str] = &["is", "am", "are", "was", "were", "be", "being", "been"];

/// Negated copula contractions; each carries a be-form.
pub const NEGATED_BE: &[&str] = &["isn't", "aren't", "wasn't", "weren't", "ain't"];

pub const HAVE_FORMS: &[&str] = &["has", "have", "had", "having"];

pub const NEGATED_HAVE: &[&str] = &["hasn't", "haven't", "hadn't"];

/// Heads whose `'s` reads as `is`.
pub const DEFAULT_S_HEADS: &[&str] = &["it", "that", "there", "who", "here", "what", "she", "he"];

/// Tokens allowed between a have-form and its participle.
pub const DEFAULT_SKIP_WORDS: &[&str] = &["not", "never", "already", "just", "yet", "also"];

/// Irregular past participles, plus regular ones the suffix rule rejects.
static IRREGULAR_PARTICIPLES: &[&str] = &[
    "arisen",
    "awoken",
    "been",
    "borne",
    "born",
    "beaten",
    "become",
    "begun",
    "bent",
    "bet",
    "bid",
    "bidden",
    "bitten",
    "bled",
    "blown",
    "broken",
    "bred",
    "brought",
    "built",
    "burnt",
    "burst",
    "bought",
    "cast",
    "caught",
    "chosen",
    "clung",
    "come",
    "cost",
    "crept",
    "cut",
    "dealt",
    "dug",
    "done",
    "drawn",
    "dreamt",
    "drunk",
    "driven",
    "dwelt",
    "eaten",
    "fallen",
    "fed",
    "felt",
    "fought",
    "found",
    "fled",
    "flung",
    "flown",
    "forbidden",
    "forecast",
    "foreseen",
    "foretold",
    "forgotten",
    "forgiven",
    "forsaken",
    "frozen",
    "got",
    "gotten",
    "given",
    "gone",
    "ground",
    "grown",
    "hung",
    "heard",
    "hidden",
    "hit",
    "held",
    "hurt",
    "kept",
    "knelt",
    "knit",
    "known",
    "laid",
    "led",
    "leant",
    "leapt",
    "learnt",
    "left",
    "lent",
    "let",
    "lain",
    "lit",
    "lost",
    "made",
    "meant",
    "met",
    "mistaken",
    "misunderstood",
    "mown",
    "overcome",
    "overdone",
    "overtaken",
    "overthrown",
    "overseen",
    "paid",
    "proven",
    "put",
    "quit",
    "read",
    "rid",
    "ridden",
    "rung",
    "risen",
    "run",
    "sawn",
    "said",
    "seen",
    "sought",
    "sold",
    "sent",
    "set",
    "sewn",
    "shaken",
    "shaven",
    "shorn",
    "shed",
    "shone",
    "shot",
    "shown",
    "shrunk",
    "shut",
    "sung",
    "sunk",
    "sat",
    "slain",
    "slept",
    "slid",
    "slung",
    "slit",
    "smelt",
    "sown",
    "spoken",
    "sped",
    "spelt",
    "spent",
    "spilt",
    "spun",
    "spat",
    "split",
    "spoilt",
    "spread",
    "sprung",
    "stood",
    "stolen",
    "stuck",
    "stung",
    "stunk",
    "stridden",
    "struck",
    "strung",
    "striven",
    "sworn",
    "swept",
    "swollen",
    "swum",
    "swung",
    "taken",
    "taught",
    "torn",
    "told",
    "thought",
    "thrived",
    "thrown",
    "thrust",
    "trodden",
    "understood",
    "undergone",
    "undertaken",
    "undone",
    "upheld",
    "upset",
    "woken",
    "worn",
    "woven",
    "wed",
    "wept",
    "wet",
    "won",
    "wound",
    "withdrawn",
    "withheld",
    "withstood",
    "written",
    "wrung",
    "agreed",
    "freed",
    "guaranteed",
    "decreed",
    "refereed",
    "used",
    "outgrown",
    "outrun",
    "outdone",
    "rewritten",
    "reread",
    "rebuilt",
    "redone",
    "remade",
    "retold",
    "resold",
    "reset",
    "rethought",
    "mislaid",
    "misled",
    "misread",
    "mistook",
    "oversaw",
    "overheard",
    "overlooked",
    "underwritten",
    "beset",
    "befallen",
    "begotten",
    "forgone",
    "forgot",
    "inlaid",
    "input",
    "output",
    "broadcast",
    "proofread",
];

/// Words ending in `-ed`/`-en` that are not participles.
static SUFFIX_EXCEPTIONS: &[&str] = &[
    "bed",
    "red",
    "shed",
    "need",
    "seed",
    "speed",
    "feed",
    "indeed",
    "hundred",
    "breed",
    "greed",
    "weed",
    "deed",
    "bleed",
    "proceed",
    "exceed",
    "succeed",
    "embed",
    "sacred",
    "naked",
    "wicked",
    "kindred",
    "rugged",
    "ragged",
    "crooked",
    "beloved",
    "sled",
    "shred",
    "often",
    "even",
    "open",
    "happen",
    "listen",
    "when",
    "then",
    "ten",
    "men",
    "women",
    "children",
    "garden",
    "token",
    "tokens",
    "kitchen",
    "between",
    "seven",
    "eleven",
    "chicken",
    "dozen",
    "citizen",
    "screen",
    "green",
    "queen",
    "oxygen",
    "specimen",
    "sudden",
    "heaven",
    "golden",
    "wooden",
    "linen",
    "burden",
    "siren",
    "omen",
    "warden",
    "hen",
    "pen",
    "den",
    "amen",
    "alien",
    "barren",
    "maiden",
    "raven",
    "threaten",
    "strengthen",
    "lengthen",
    "widen",
    "deepen",
    "weaken",
    "harden",
    "soften",
    "sharpen",
    "flatten",
    "tighten",
    "loosen",
    "brighten",
    "darken",
    "fasten",
    "frighten",
    "lessen",
    "broaden",
    "shorten",
    "hasten",
    "dampen",
    "awaken",
    "christen",
    "kitten",
    "mitten",
    "button",
    "seventeen",
    "thirteen",
    "fourteen",
    "fifteen",
    "sixteen",
    "eighteen",
    "nineteen",
    "keen",
    "teen",
    "canteen",
    "regimen",
    "abdomen",
    "semen",
    "lumen",
    "stamen",
    "aspen",
];

/// Noun-phrase openers: after `'d`, these signal possessive `had`.
static NP_OPENERS: &[&str] = &[
    "a", "an", "the", "some", "any", "no", "many", "much", "few", "several", "my", "your", "his", "her", "its", "our",
    "their", "this", "that", "these", "those", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine",
    "ten", "every", "each", "enough", "plenty", "lots",
];

static IRREGULAR_SET: Lazy<HashSet<&'static str>> = Lazy::new(|| IRREGULAR_PARTICIPLES.iter().copied().collect());
static EXCEPTION_SET: Lazy<HashSet<&'static str>> = Lazy::new(|| SUFFIX_EXCEPTIONS.iter().copied().collect());
static NP_OPENER_SET: Lazy<HashSet<&'static str>> = Lazy::new(|| NP_OPENERS.iter().copied().collect());

#[cfg(test)]
fn irregular_participle_count() -> usize {
    IRREGULAR_SET.len()
}

/// Past-participle test: irregular lexicon first, then `-ed`/`-en` suffix rule.
pub fn is_past_participle(word: &str) -> bool {
    if IRREGULAR_SET.contains(word) {
        return true;
    }
    if EXCEPTION_SET.contains(word) || !word.chars().all(char::is_alphabetic) {
        return false;
    }
    if word.ends_with("eed") {
        return false;
    }
    let n = word.chars().count();
    (word.ends_with("ed") && n >= 4) || (word.ends_with("en") && n >= 5)
}

pub fn is_np_opener(word: &str) -> bool {
    NP_OPENER_SET.contains(word) || word.chars().all(|c| c.is_ascii_digit())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lexicon_size() {
        let n = irregular_participle_count();
        assert!((170..=230).contains(&n), "irregular lexicon holds {n} entries");
    }

    #[test]
    fn participles() {
        for w in ["completed", "been", "finished", "given", "written", "seen", "made", "used"] {
            assert!(is_past_participle(w), "{w}");
        }
        for w in ["a", "three", "to", "need", "often", "children", "open", "red", "flaw", "hundred"] {
            assert!(!is_past_participle(w), "{w}");
        }
    }
}
