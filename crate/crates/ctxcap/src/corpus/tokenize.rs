//! Word tokenization.
//!
//! Text is lower-cased and split on whitespace and punctuation, with
//! punctuation retained as single-character tokens. In news mode, numeric,
//! date and time patterns are replaced with the special tokens below:
//!
//! | pattern                         | token    |
//! |---------------------------------|----------|
//! | `12:30`, `9:05:17`, `3:15pm`    | `<time>` |
//! | 4-digit year 1900..=2099        | `<date>` |
//! | ordinal `1st` `2nd` `3rd` `4th` | `<date>` |
//! | any other digit run, `1,000`,   | `<num>`  |
//! | `3.14`                          |          |
//!
//! Special tokens are atomic: re-tokenizing text that contains them leaves
//! them intact, so `tokenize(join(tokenize(x))) == tokenize(x)`.

use std::sync::OnceLock;

use regex::Regex;

pub const PAD: &str = "<pad>";
pub const BOS: &str = "<bos>";
pub const EOS: &str = "<eos>";
pub const UNK: &str = "<unk>";
pub const NUM: &str = "<num>";
pub const DATE: &str = "<date>";
pub const TIME: &str = "<time>";

/// All special tokens, in their fixed vocabulary order.
pub const SPECIAL_TOKENS: [&str; 7] = [PAD, BOS, EOS, UNK, NUM, DATE, TIME];

/// Fixed 50-word stopword list used by the caption/context overlap measure.
pub const STOPWORDS: [&str; 50] = [
    "the", "a", "an", "and", "or", "but", "if", "then", "of", "to", "in", "on", "at", "by",
    "for", "with", "from", "up", "down", "out", "over", "under", "is", "are", "was", "were",
    "be", "been", "being", "am", "do", "does", "did", "have", "has", "had", "he", "she", "it",
    "they", "we", "you", "i", "his", "her", "its", "their", "this", "that", "as",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenizeMode {
    /// Lowercase + split only.
    Plain,
    /// Additionally fold numbers, dates and times into special tokens.
    News,
}

pub fn is_special_token(token: &str) -> bool {
    SPECIAL_TOKENS.contains(&token)
}

pub fn is_stopword(token: &str) -> bool {
    STOPWORDS.contains(&token)
}

/// True for tokens with no alphanumeric character (",", "-", "'", ...).
pub fn is_punctuation(token: &str) -> bool {
    !token.is_empty() && !token.chars().any(|c| c.is_alphanumeric())
}

fn time_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?i)\b\d{1,2}:\d{2}(?::\d{2})?(?:\s?[ap]m)?\b").expect("static regex")
    })
}

fn grouped_num_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"\b\d{1,3}(?:[,']\d{3})+(?:\.\d+)?\b|\b\d+\.\d+\b").expect("static regex")
    })
}

fn ordinal_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)\b\d+(?:st|nd|rd|th)\b").expect("static regex"))
}

fn is_year(token: &str) -> bool {
    token.len() == 4
        && token.chars().all(|c| c.is_ascii_digit())
        && (1900..=2099).contains(&token.parse::<u32>().unwrap_or(0))
}

pub fn tokenize(text: &str, mode: TokenizeMode) -> Vec<String> {
    let prepared;
    let text = if mode == TokenizeMode::News {
        let t = time_re().replace_all(text, format!(" {TIME} "));
        let t = grouped_num_re().replace_all(&t, format!(" {NUM} "));
        prepared = ordinal_re().replace_all(&t, format!(" {DATE} ")).into_owned();
        prepared.as_str()
    } else {
        text
    };

    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c == '<' {
            if let Some(tok) = match_special(&chars[i..]) {
                i += tok.chars().count();
                tokens.push(tok.to_string());
                continue;
            }
        }
        if c.is_alphanumeric() {
            let mut j = i;
            while j < chars.len() && chars[j].is_alphanumeric() {
                j += 1;
            }
            let word: String = chars[i..j].iter().flat_map(|c| c.to_lowercase()).collect();
            tokens.push(word);
            i = j;
        } else {
            tokens.push(c.to_string());
            i += 1;
        }
    }

    if mode == TokenizeMode::News {
        for tok in tokens.iter_mut() {
            if is_special_token(tok) {
                continue;
            }
            if is_year(tok) {
                *tok = DATE.to_string();
            } else if !tok.is_empty() && tok.chars().all(|c| c.is_ascii_digit()) {
                *tok = NUM.to_string();
            }
        }
    }
    tokens
}

fn match_special(rest: &[char]) -> Option<&'static str> {
    for tok in SPECIAL_TOKENS {
        let tc: Vec<char> = tok.chars().collect();
        if rest.len() >= tc.len() && rest[..tc.len()] == tc[..] {
            return Some(tok);
        }
    }
    None
}

/// Inverse of tokenization up to whitespace: single-space join.
pub fn join_tokens(tokens: &[String]) -> String {
    tokens.join(" ")
}

/// Split raw text into sentences at `.`, `!` and `?`, keeping the
/// terminator with its sentence. Newlines are treated as soft breaks.
pub fn split_sentences(text: &str) -> Vec<String> {
    let mut sentences = Vec::new();
    let mut current = String::new();
    for c in text.chars() {
        let c = if c == '\n' || c == '\r' { ' ' } else { c };
        current.push(c);
        if c == '.' || c == '!' || c == '?' {
            let s = current.trim();
            if !s.is_empty() {
                sentences.push(s.to_string());
            }
            current.clear();
        }
    }
    let tail = current.trim();
    if !tail.is_empty() {
        sentences.push(tail.to_string());
    }
    sentences
}
