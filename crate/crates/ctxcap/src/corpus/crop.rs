//! Sentence-wise context cropping to a fixed token budget.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CropMode {
    /// Drop whole sentences from the end (news articles).
    NewsEnd,
    /// Drop alternately from the end and the beginning, keeping the aligned
    /// center (movie script scenes).
    ScriptBothEnds,
}

/// Crop tokenized sentences to at most `max_tokens`, returning the flattened
/// token sequence. A single sentence longer than the budget is hard-truncated
/// with a warning.
pub fn crop_context(sentences: &[Vec<String>], max_tokens: usize, mode: CropMode) -> Vec<String> {
    let mut lo = 0usize;
    let mut hi = sentences.len();
    let mut total: usize = sentences.iter().map(|s| s.len()).sum();
    let mut drop_end_next = true;
    while total > max_tokens && hi - lo > 1 {
        match mode {
            CropMode::NewsEnd => {
                hi -= 1;
                total -= sentences[hi].len();
            }
            CropMode::ScriptBothEnds => {
                if drop_end_next {
                    hi -= 1;
                    total -= sentences[hi].len();
                } else {
                    total -= sentences[lo].len();
                    lo += 1;
                }
                drop_end_next = !drop_end_next;
            }
        }
    }
    let mut out: Vec<String> = sentences[lo..hi].iter().flatten().cloned().collect();
    if out.len() > max_tokens {
        log::warn!(
            "single sentence of {} tokens exceeds context budget {}; hard-truncating",
            out.len(),
            max_tokens
        );
        out.truncate(max_tokens);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sentence(prefix: &str, len: usize) -> Vec<String> {
        (0..len).map(|i| format!("{prefix}{i}")).collect()
    }

    #[test]
    fn within_budget_is_unchanged() {
        let s = vec![sentence("a", 3), sentence("b", 4)];
        let out = crop_context(&s, 400, CropMode::NewsEnd);
        assert_eq!(out.len(), 7);
    }

    #[test]
    fn news_mode_keeps_leading_sentences() {
        // 3 sentences of 200 tokens with budget 400: first two kept.
        let s = vec![sentence("a", 200), sentence("b", 200), sentence("c", 200)];
        let out = crop_context(&s, 400, CropMode::NewsEnd);
        assert_eq!(out.len(), 400);
        assert_eq!(out[0], "a0");
        assert_eq!(out[399], "b199");
    }

    #[test]
    fn script_mode_retains_the_middle() {
        let s = vec![sentence("a", 200), sentence("b", 200), sentence("c", 200)];
        let out = crop_context(&s, 400, CropMode::ScriptBothEnds);
        // End dropped first, so [a, b] survive and the middle is present.
        assert!(out.iter().any(|t| t.starts_with('b')));
        assert_eq!(out.len(), 400);

        // With four sentences and a 400 budget the two central ones remain.
        let s4 = vec![
            sentence("a", 200),
            sentence("b", 200),
            sentence("c", 200),
            sentence("d", 200),
        ];
        let out4 = crop_context(&s4, 400, CropMode::ScriptBothEnds);
        assert_eq!(out4[0], "b0");
        assert_eq!(out4[399], "c199");
    }

    #[test]
    fn oversized_single_sentence_is_hard_truncated() {
        let s = vec![sentence("x", 500)];
        let out = crop_context(&s, 400, CropMode::NewsEnd);
        assert_eq!(out.len(), 400);
        assert_eq!(out[0], "x0");
    }
}
