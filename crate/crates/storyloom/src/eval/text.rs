//! Text diversity metrics and corpus statistics.
//!
//! `distinctl_n` is the length-adjusted distinct n-gram ratio:
//! (unique n-grams / total n-grams) × (1 + log word_count), natural log by
//! default. n-grams run over the lowercased token stream with no sentence
//! barrier.

use std::collections::BTreeSet;
use std::collections::HashSet;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TextMetricError {
    #[error("text is empty after tokenization")]
    EmptyText,
    #[error("text has {word_count} words, fewer than n = {n}")]
    TextTooShort { word_count: usize, n: usize },
    #[error("n must be >= 1")]
    ZeroN,
    #[error("corpus contains no texts")]
    EmptyCorpus,
}

/// Lowercased word tokens plus their count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenizedText {
    pub tokens: Vec<String>,
    pub word_count: usize,
}

/// Splits on Unicode whitespace, strips leading/trailing non-alphanumeric
/// characters per token, and lowercases. Tokens that strip to nothing are
/// dropped, so the output never contains empty tokens.
pub fn tokenize(text: &str) -> TokenizedText {
    let tokens: Vec<String> = text
        .split_whitespace()
        .filter_map(|raw| {
            let trimmed = raw.trim_matches(|c: char| !c.is_alphanumeric());
            if trimmed.is_empty() {
                None
            } else {
                Some(trimmed.to_lowercase())
            }
        })
        .collect();
    let word_count = tokens.len();
    TokenizedText { tokens, word_count }
}

/// Which logarithm the length adjustment uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LogBase {
    #[default]
    Natural,
    /// For sensitivity checks only.
    Base10,
}

impl LogBase {
    fn log(&self, x: f64) -> f64 {
        match self {
            LogBase::Natural => x.ln(),
            LogBase::Base10 => x.log10(),
        }
    }
}

/// DistinctL-n with the natural-log length adjustment.
pub fn distinctl_n(text: &TokenizedText, n: usize) -> Result<f64, TextMetricError> {
    distinctl_n_with(text, n, LogBase::Natural)
}

/// DistinctL-n with an explicit log base.
pub fn distinctl_n_with(
    text: &TokenizedText,
    n: usize,
    base: LogBase,
) -> Result<f64, TextMetricError> {
    if n == 0 {
        return Err(TextMetricError::ZeroN);
    }
    if text.word_count == 0 {
        return Err(TextMetricError::EmptyText);
    }
    if text.word_count < n {
        return Err(TextMetricError::TextTooShort {
            word_count: text.word_count,
            n,
        });
    }
    let total = text.word_count - n + 1;
    let unique = text
        .tokens
        .windows(n)
        .collect::<HashSet<_>>()
        .len();
    let ratio = unique as f64 / total as f64;
    Ok(ratio * (1.0 + base.log(text.word_count as f64)))
}

/// A set of word forms that count as verbs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerbLexicon {
    verbs: BTreeSet<String>,
}

impl VerbLexicon {
    /// The lexicon shipped with the crate.
    pub fn builtin() -> Self {
        Self::from_text(include_str!("../../data/verbs.txt"))
    }

    /// One verb form per line; blank lines and `#` comments ignored.
    pub fn from_text(text: &str) -> Self {
        let verbs = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_lowercase)
            .collect();
        VerbLexicon { verbs }
    }

    pub fn from_file(path: &std::path::Path) -> std::io::Result<Self> {
        Ok(Self::from_text(&std::fs::read_to_string(path)?))
    }

    pub fn len(&self) -> usize {
        self.verbs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.verbs.is_empty()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.verbs.contains(token)
    }
}

/// Unique verb types over total verb tokens, where a verb token is any
/// token found in the lexicon. A text with zero verb tokens scores 1.0 by
/// convention (no action was repeated).
pub fn diverse_verbs(text: &TokenizedText, lexicon: &VerbLexicon) -> f64 {
    let verb_tokens: Vec<&String> = text
        .tokens
        .iter()
        .filter(|t| lexicon.contains(t))
        .collect();
    if verb_tokens.is_empty() {
        return 1.0;
    }
    let unique = verb_tokens.iter().collect::<HashSet<_>>().len();
    unique as f64 / verb_tokens.len() as f64
}

/// Word-count statistics over a corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusStats {
    pub per_text_counts: Vec<usize>,
    pub avg_word_count: f64,
}

/// Arithmetic mean of word counts; the sum stays exact in integers and a
/// single division happens at the end.
pub fn corpus_stats(counts: &[usize]) -> Result<CorpusStats, TextMetricError> {
    if counts.is_empty() {
        return Err(TextMetricError::EmptyCorpus);
    }
    let sum: u128 = counts.iter().map(|c| *c as u128).sum();
    Ok(CorpusStats {
        per_text_counts: counts.to_vec(),
        avg_word_count: sum as f64 / counts.len() as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(words: &[&str]) -> TokenizedText {
        TokenizedText {
            tokens: words.iter().map(|w| w.to_string()).collect(),
            word_count: words.len(),
        }
    }

    #[test]
    fn tokenize_strips_punctuation_and_lowercases() {
        let t = tokenize("The cat. The cat!");
        assert_eq!(t.tokens, vec!["the", "cat", "the", "cat"]);
        assert_eq!(t.word_count, 4);
    }

    #[test]
    fn tokenize_empty_input() {
        assert_eq!(tokenize("").word_count, 0);
        assert_eq!(tokenize("  \t\n ").word_count, 0);
        assert_eq!(tokenize("— … !!").word_count, 0);
    }

    #[test]
    fn tokenize_keeps_interior_punctuation() {
        let t = tokenize("\"Don't,\" she said—twice.");
        assert_eq!(t.tokens, vec!["don't", "she", "said—twice"]);
    }

    #[test]
    fn distinctl_all_unique_bigrams() {
        let value = distinctl_n(&toks(&["a", "b", "c", "d"]), 2).unwrap();
        let expected = 1.0 * (1.0 + (4.0f64).ln());
        assert!((value - expected).abs() < 1e-12);
        assert!((value - 2.386294).abs() < 1e-6);
    }

    #[test]
    fn distinctl_repeated_bigrams() {
        let value = distinctl_n(&toks(&["a", "a", "a", "a"]), 2).unwrap();
        let expected = (1.0 / 3.0) * (1.0 + (4.0f64).ln());
        assert!((value - expected).abs() < 1e-12);
        assert!((value - 0.795431).abs() < 1e-6);
    }

    #[test]
    fn distinctl_error_paths() {
        assert_eq!(
            distinctl_n(&toks(&["a"]), 2),
            Err(TextMetricError::TextTooShort { word_count: 1, n: 2 })
        );
        assert_eq!(distinctl_n(&toks(&[]), 2), Err(TextMetricError::EmptyText));
        assert_eq!(distinctl_n(&toks(&["a"]), 0), Err(TextMetricError::ZeroN));
    }

    #[test]
    fn distinctl_log10_flag() {
        let t = toks(&["a", "b", "c", "d"]);
        let value = distinctl_n_with(&t, 2, LogBase::Base10).unwrap();
        assert!((value - (1.0 + 4.0f64.log10())).abs() < 1e-12);
    }

    #[test]
    fn diverse_verbs_counts_types_over_tokens() {
        let lexicon = VerbLexicon::from_text("run\njump\n");
        let score = diverse_verbs(&toks(&["run", "jump", "run"]), &lexicon);
        assert!((score - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn diverse_verbs_all_distinct_is_one() {
        let lexicon = VerbLexicon::from_text("run\njump\nswim\n");
        assert_eq!(diverse_verbs(&toks(&["run", "jump", "swim", "rock"]), &lexicon), 1.0);
    }

    #[test]
    fn diverse_verbs_no_verbs_is_one_by_convention() {
        let lexicon = VerbLexicon::from_text("run\n");
        assert_eq!(diverse_verbs(&toks(&["stone", "sky"]), &lexicon), 1.0);
    }

    #[test]
    fn builtin_lexicon_loads() {
        let lexicon = VerbLexicon::builtin();
        assert!(lexicon.len() > 1000);
        assert!(lexicon.contains("walk"));
        assert!(lexicon.contains("walked"));
        assert!(lexicon.contains("whispered"));
        assert!(!lexicon.contains("table"));
    }

    #[test]
    fn corpus_stats_mean() {
        let stats = corpus_stats(&[10, 20]).unwrap();
        assert_eq!(stats.avg_word_count, 15.0);
        let single = corpus_stats(&[42]).unwrap();
        assert_eq!(single.avg_word_count, 42.0);
        assert_eq!(corpus_stats(&[]), Err(TextMetricError::EmptyCorpus));
    }

    proptest! {
        /// All-unique n-grams collapse the formula to 1 + ln(word_count).
        #[test]
        fn all_unique_tokens_hit_upper_ratio(len in 2usize..200, n in 1usize..5) {
            prop_assume!(len >= n);
            let words: Vec<String> = (0..len).map(|i| format!("w{i}")).collect();
            let t = TokenizedText { word_count: words.len(), tokens: words };
            let value = distinctl_n(&t, n).unwrap();
            prop_assert!((value - (1.0 + (len as f64).ln())).abs() < 1e-12);
        }

        /// Brute-force recount with an independently written loop.
        #[test]
        fn distinctl_matches_bruteforce(tokens in proptest::collection::vec(0u8..6, 2..120), n in 1usize..5) {
            prop_assume!(tokens.len() >= n);
            let words: Vec<String> = tokens.iter().map(|t| format!("t{t}")).collect();
            let t = TokenizedText { word_count: words.len(), tokens: words.clone() };
            let value = distinctl_n(&t, n).unwrap();

            let mut seen: Vec<Vec<String>> = Vec::new();
            let mut total = 0usize;
            for i in 0..=(words.len() - n) {
                let gram: Vec<String> = words[i..i + n].to_vec();
                total += 1;
                if !seen.contains(&gram) {
                    seen.push(gram);
                }
            }
            let oracle = (seen.len() as f64 / total as f64) * (1.0 + (words.len() as f64).ln());
            prop_assert!((value - oracle).abs() < 1e-12);
        }

        #[test]
        fn corpus_mean_matches_naive_sum(counts in proptest::collection::vec(0usize..10_000, 1..100)) {
            let stats = corpus_stats(&counts).unwrap();
            let naive: f64 = counts.iter().map(|c| *c as f64).sum::<f64>() / counts.len() as f64;
            prop_assert!((stats.avg_word_count - naive).abs() < 1e-9);
        }
    }
}
