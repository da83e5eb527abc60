use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::EvaluateError;
use crate::domain::word_count;
use crate::reformulate::{match_template, CorpusEntry};

/// Key used for originals no template matches.
pub const UNMATCHED: &str = "UNMATCHED";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub query_count: usize,
    pub mean_words_original: f64,
    pub mean_words_reformulated: f64,
    pub mean_steps: f64,
    pub template_counts: BTreeMap<String, usize>,
}

pub fn corpus_stats(entries: &[CorpusEntry]) -> Result<CorpusStats, EvaluateError> {
    if entries.is_empty() {
        return Err(EvaluateError::EmptyCorpus);
    }
    let n = entries.len() as f64;
    // integer sums keep the means independent of entry order
    let original: usize = entries.iter().map(|e| word_count(&e.original)).sum();
    let reformulated: usize = entries.iter().map(|e| word_count(&e.reformulated)).sum();
    let steps: usize = entries.iter().map(|e| e.steps.len()).sum();
    let mut template_counts = BTreeMap::new();
    for e in entries {
        let key = match_template(&e.original).map_or(UNMATCHED, |t| t.as_str());
        *template_counts.entry(key.to_string()).or_insert(0) += 1;
    }
    Ok(CorpusStats {
        query_count: entries.len(),
        mean_words_original: original as f64 / n,
        mean_words_reformulated: reformulated as f64 / n,
        mean_steps: steps as f64 / n,
        template_counts,
    })
}
