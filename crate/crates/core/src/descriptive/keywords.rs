//! Keyword extraction by corpus-wide term frequency.
//!
//! Tokenization is deliberately the simplest deterministic scheme: lowercase,
//! split on any non-alphanumeric character, drop tokens shorter than two
//! characters and stopwords. No stemming, no document weighting. Ranking is
//! by total frequency descending with lexicographic tie-breaks, so the same
//! corpus always yields the same list. Per-document counting is data-parallel
//! with a deterministic merge (counts are summed, and summation is
//! order-independent); [`seq`] holds the always-available sequential path.

use std::collections::{BTreeMap, BTreeSet};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use super::DescriptiveError;

/// Stopword list bundled with the crate, one word per line.
pub const BUNDLED_STOPWORDS: &str = include_str!("stopwords_en.txt");

/// Parses a stopword file: one word per line, blank lines and `#` comments
/// ignored, entries lowercased.
pub fn parse_stopwords(text: &str) -> BTreeSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|line| !line.is_empty() && !line.starts_with('#'))
        .map(str::to_lowercase)
        .collect()
}

/// The bundled minimal English stopword set.
pub fn bundled_stopwords() -> BTreeSet<String> {
    parse_stopwords(BUNDLED_STOPWORDS)
}

fn count_document(doc: &str, stopwords: &BTreeSet<String>) -> BTreeMap<String, u64> {
    let mut counts = BTreeMap::new();
    for token in doc.to_lowercase().split(|c: char| !c.is_alphanumeric()) {
        if token.chars().count() < 2 || stopwords.contains(token) {
            continue;
        }
        *counts.entry(token.to_string()).or_insert(0) += 1;
    }
    counts
}

fn merge_counts(mut a: BTreeMap<String, u64>, b: BTreeMap<String, u64>) -> BTreeMap<String, u64> {
    for (term, count) in b {
        *a.entry(term).or_insert(0) += count;
    }
    a
}

/// Sequential reference implementations of the corpus counters.
pub mod seq {
    use super::*;

    /// Corpus-wide term frequencies after tokenization and filtering.
    pub fn term_frequencies(
        corpus: &[String],
        stopwords: &BTreeSet<String>,
    ) -> BTreeMap<String, u64> {
        corpus
            .iter()
            .map(|doc| count_document(doc, stopwords))
            .fold(BTreeMap::new(), merge_counts)
    }
}

/// Corpus-wide term frequencies after tokenization and filtering.
pub fn term_frequencies(corpus: &[String], stopwords: &BTreeSet<String>) -> BTreeMap<String, u64> {
    #[cfg(feature = "parallel")]
    {
        corpus
            .par_iter()
            .map(|doc| count_document(doc, stopwords))
            .reduce(BTreeMap::new, merge_counts)
    }
    #[cfg(not(feature = "parallel"))]
    {
        seq::term_frequencies(corpus, stopwords)
    }
}

/// The top `k` terms of the corpus by total frequency, descending, with ties
/// broken lexicographically. Asking for more terms than the vocabulary holds
/// returns the whole vocabulary.
pub fn extract_keywords(
    corpus: &[String],
    k: usize,
    stopwords: &BTreeSet<String>,
) -> Vec<(String, u64)> {
    let counts = term_frequencies(corpus, stopwords);
    let mut ranked: Vec<(String, u64)> = counts.into_iter().collect();
    ranked.sort_by(|(term_a, freq_a), (term_b, freq_b)| {
        freq_b.cmp(freq_a).then_with(|| term_a.cmp(term_b))
    });
    ranked.truncate(k);
    ranked
}

/// Share of terms two equally long keyword lists have in common:
/// `|terms(a) ∩ terms(b)| / k`.
pub fn keyword_overlap(
    a: &[(String, u64)],
    b: &[(String, u64)],
) -> Result<f64, DescriptiveError> {
    if a.is_empty() || b.is_empty() || a.len() != b.len() {
        return Err(DescriptiveError::KeywordListMismatch {
            a: a.len(),
            b: b.len(),
        });
    }
    let set_a: BTreeSet<&str> = a.iter().map(|(t, _)| t.as_str()).collect();
    let set_b: BTreeSet<&str> = b.iter().map(|(t, _)| t.as_str()).collect();
    Ok(set_a.intersection(&set_b).count() as f64 / a.len() as f64)
}
