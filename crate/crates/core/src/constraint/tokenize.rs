use serde::{Deserialize, Serialize};

/// A word or punctuation token. Offsets count Unicode scalar values, not bytes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub lower: String,
    pub start: usize,
    pub end: usize,
    pub is_word: bool,
}

impl Token {
    /// Lowercased surface with typographic apostrophes folded to `'`.
    pub fn key(&self) -> String {
        self.lower.replace(['\u{2019}', '\u{2018}'], "'")
    }
}

fn is_apostrophe(c: char) -> bool {
    matches!(c, '\'' | '\u{2019}')
}

/// Splits `text` into word and punctuation tokens. Whitespace is never a
/// token; it survives only as the gap between consecutive offsets.
///
/// An apostrophe joins a word only when letters or digits sit on both sides,
/// so `it's` and `John's` stay whole while quotes around words split off.
pub fn tokenize(text: &str) -> Vec<Token> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c.is_alphanumeric() {
            let start = i;
            i += 1;
            while i < chars.len() {
                let d = chars[i];
                if d.is_alphanumeric() {
                    i += 1;
                } else if is_apostrophe(d) && i + 1 < chars.len() && chars[i + 1].is_alphanumeric() {
                    i += 2;
                } else {
                    break;
                }
            }
            tokens.push(make_token(&chars, start, i, true));
        } else {
            tokens.push(make_token(&chars, i, i + 1, false));
            i += 1;
        }
    }
    tokens
}

fn make_token(chars: &[char], start: usize, end: usize, is_word: bool) -> Token {
    let surface: String = chars[start..end].iter().collect();
    Token { lower: surface.to_lowercase(), surface, start, end, is_word }
}

/// Number of word tokens in `text`.
pub fn word_count(text: &str) -> usize {
    tokenize(text).iter().filter(|t| t.is_word).count()
}

/// Slices `text` by character offsets as produced by [`tokenize`].
pub fn char_slice(text: &str, start: usize, end: usize) -> &str {
    let mut indices = text.char_indices().map(|(b, _)| b).chain(std::iter::once(text.len()));
    let from = indices.nth(start).unwrap_or(text.len());
    let to = if end > start { indices.nth(end - start - 1).unwrap_or(text.len()) } else { from };
    &text[from..to]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn surfaces(text: &str) -> Vec<String> {
        tokenize(text).into_iter().map(|t| t.surface).collect()
    }

    #[test]
    fn empty_input() {
        assert!(tokenize("").is_empty());
        assert!(tokenize("   \n\t").is_empty());
    }

    #[test]
    fn contraction_stays_whole() {
        let toks = tokenize("it's here");
        assert_eq!(toks.len(), 2);
        assert_eq!((toks[0].surface.as_str(), toks[0].start, toks[0].end), ("it's", 0, 4));
        assert_eq!((toks[1].surface.as_str(), toks[1].start, toks[1].end), ("here", 5, 9));
    }

    #[test]
    fn sentence_with_period() {
        let toks = tokenize("The cat sat.");
        let words: Vec<_> = toks.iter().filter(|t| t.is_word).map(|t| t.surface.as_str()).collect();
        assert_eq!(words, ["The", "cat", "sat"]);
        let punct: Vec<_> = toks.iter().filter(|t| !t.is_word).map(|t| t.surface.as_str()).collect();
        assert_eq!(punct, ["."]);
    }

    #[test]
    fn quotes_and_trailing_apostrophes_split() {
        assert_eq!(surfaces("'hello' dogs' John’s"), ["'", "hello", "'", "dogs", "'", "John’s"]);
        assert_eq!(surfaces("well-known"), ["well", "-", "known"]);
    }

    #[test]
    fn offsets_are_chars() {
        let text = "café is über";
        let toks = tokenize(text);
        assert_eq!(toks[1].start, 5);
        assert_eq!(char_slice(text, toks[2].start, toks[2].end), "über");
    }

    proptest! {
        #[test]
        fn reconstructs_input(text in "\\PC{0,80}") {
            let toks = tokenize(&text);
            let chars: Vec<char> = text.chars().collect();
            let mut rebuilt = String::new();
            let mut pos = 0;
            for t in &toks {
                prop_assert!(t.start < t.end);
                prop_assert!(t.start >= pos);
                let gap: String = chars[pos..t.start].iter().collect();
                prop_assert!(gap.chars().all(char::is_whitespace));
                rebuilt.push_str(&gap);
                rebuilt.push_str(&t.surface);
                pos = t.end;
            }
            rebuilt.extend(chars[pos..].iter());
            prop_assert_eq!(rebuilt, text);
        }
    }
}
