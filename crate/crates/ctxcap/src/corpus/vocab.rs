use std::collections::HashMap;
use std::path::Path;

use super::tokenize::{is_special_token, SPECIAL_TOKENS};
use super::{CorpusError, Result};

/// Global token/index map. The seven special tokens occupy the fixed lowest
/// indices; everything else is ordered by descending training-split frequency
/// with lexicographic tie-break, so the build is deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

pub const PAD_ID: usize = 0;
pub const BOS_ID: usize = 1;
pub const EOS_ID: usize = 2;
pub const UNK_ID: usize = 3;

impl Vocabulary {
    /// Build from a training corpus, clipping to the `max_size` most frequent
    /// tokens (special tokens included in the budget).
    pub fn build<'a, I>(corpus: I, max_size: usize) -> Self
    where
        I: IntoIterator<Item = &'a [String]>,
    {
        let mut freq: HashMap<&str, u64> = HashMap::new();
        for seq in corpus {
            for tok in seq {
                if !is_special_token(tok) {
                    *freq.entry(tok.as_str()).or_insert(0) += 1;
                }
            }
        }
        let mut ranked: Vec<(&str, u64)> = freq.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        let budget = max_size.saturating_sub(SPECIAL_TOKENS.len());
        let tokens = SPECIAL_TOKENS
            .iter()
            .map(|s| s.to_string())
            .chain(ranked.into_iter().take(budget).map(|(t, _)| t.to_string()))
            .collect();
        Self::from_token_list(tokens)
    }

    /// Construct from an explicit word list; specials are prepended if absent.
    pub fn from_words<S: AsRef<str>>(words: &[S]) -> Self {
        let tokens = SPECIAL_TOKENS
            .iter()
            .map(|s| s.to_string())
            .chain(
                words
                    .iter()
                    .map(|w| w.as_ref().to_string())
                    .filter(|w| !is_special_token(w)),
            )
            .collect();
        Self::from_token_list(tokens)
    }

    fn from_token_list(tokens: Vec<String>) -> Self {
        let mut index = HashMap::with_capacity(tokens.len());
        let mut unique = Vec::with_capacity(tokens.len());
        for t in tokens {
            if !index.contains_key(&t) {
                index.insert(t.clone(), unique.len());
                unique.push(t);
            }
        }
        Vocabulary {
            tokens: unique,
            index,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    /// Index of `token`, or the UNK index when out of vocabulary.
    pub fn encode(&self, token: &str) -> usize {
        self.id(token).unwrap_or(UNK_ID)
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.tokens.get(id).map(|s| s.as_str())
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn is_special_id(&self, id: usize) -> bool {
        id < SPECIAL_TOKENS.len()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.tokens.join("\n"))?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let words: Vec<&str> = text.lines().filter(|l| !l.is_empty()).collect();
        if words.is_empty() {
            return Err(CorpusError::EmptyInput("vocabulary file"));
        }
        Ok(Self::from_token_list(
            words.into_iter().map(str::to_string).collect(),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    #[test]
    fn specials_occupy_fixed_lowest_indices() {
        let v = Vocabulary::build([toks("x y z").as_slice()], 100);
        for (i, s) in SPECIAL_TOKENS.iter().enumerate() {
            assert_eq!(v.id(s), Some(i));
        }
        assert_eq!(v.id(super::super::PAD), Some(PAD_ID));
        assert_eq!(v.id(super::super::UNK), Some(UNK_ID));
    }

    #[test]
    fn keeps_everything_when_budget_allows() {
        let corpus = [toks("a b c"), toks("a b")];
        let v = Vocabulary::build(corpus.iter().map(|c| c.as_slice()), 100);
        assert_eq!(v.len(), 7 + 3);
        assert!(v.contains("a") && v.contains("b") && v.contains("c"));
    }

    #[test]
    fn frequency_clipping_keeps_most_frequent() {
        // Corpus "a a b" with room for exactly one real token keeps "a".
        let corpus = [toks("a a b")];
        let v = Vocabulary::build(corpus.iter().map(|c| c.as_slice()), 8);
        assert!(v.contains("a"));
        assert!(!v.contains("b"));
        assert_eq!(v.encode("b"), UNK_ID);
    }

    #[test]
    fn ties_break_lexicographically() {
        let corpus = [toks("beta alpha")];
        let v = Vocabulary::build(corpus.iter().map(|c| c.as_slice()), 8);
        assert!(v.contains("alpha"));
        assert!(!v.contains("beta"));
    }

    #[test]
    fn deterministic_across_runs_and_orderings() {
        let c1 = [toks("c a b a"), toks("b a")];
        let c2 = [toks("b a"), toks("c a b a")];
        let v1 = Vocabulary::build(c1.iter().map(|c| c.as_slice()), 9);
        let v2 = Vocabulary::build(c2.iter().map(|c| c.as_slice()), 9);
        assert_eq!(v1, v2);
    }

    #[test]
    fn save_load_roundtrip() {
        let v = Vocabulary::build([toks("walks kitchen aria").as_slice()], 50);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("vocab.txt");
        v.save(&p).unwrap();
        assert_eq!(Vocabulary::load(&p).unwrap(), v);
    }
}
