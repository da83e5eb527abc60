//! Query reformulation: prompt building, chat clients, completion caching
//! and parsing of the reformulated text into step-wise instructions.

mod cache;
mod client;
mod mock;
mod parse;
mod prompt;
mod template;

pub use cache::{CacheEntry, CompletionCache};
pub use client::{ChatClient, ClientError, HttpChatClient, RetryPolicy, API_KEY_ENV, API_URL_ENV};
pub use mock::{mock_complete, MockClient, WORKED_EXAMPLES};
pub use parse::{parse_instructions, parse_or_fallback, InstructionSequence, Relation, Step};
pub use prompt::{
    build_prompt, PromptText, DEFAULT_MODEL, DEFAULT_TEMPERATURE, PROMPT_PREAMBLE, PROMPT_SUFFIX, TEMPLATE_LINES,
};
pub use template::{match_template, TemplateId, EXAMPLE_QUERIES};

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::Query;

#[derive(Debug, Error)]
pub enum ReformulateError {
    #[error("query {0} has empty text")]
    EmptyQuery(String),
    #[error("temperature {0} outside [0, 2]")]
    Temperature(f64),
    #[error(transparent)]
    Client(#[from] ClientError),
    #[error("cache io error at {path}: {source}")]
    Cache {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("no instruction step recoverable from {0:?}")]
    Unparseable(String),
    #[error("corpus file {path}: {message}")]
    Corpus { path: PathBuf, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Live,
    Mock,
    Cache,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReformulatedQuery {
    pub query_id: String,
    pub original_text: String,
    pub reformulated_text: String,
    pub source: Source,
}

/// Reformulates `query`, serving from `cache` when the same prompt, model
/// and temperature were seen before. Fresh completions are cached only
/// after they pass validation.
pub fn reformulate(
    query: &Query,
    client: &dyn ChatClient,
    cache: &CompletionCache,
    model_hint: &str,
    temperature: f64,
) -> Result<ReformulatedQuery, ReformulateError> {
    let prompt = build_prompt(query, model_hint, temperature)?;
    let (text, source) = match cache.get(&prompt) {
        Some(hit) => (hit.completion, Source::Cache),
        None => {
            let text = client.complete(&prompt)?;
            if text.trim().is_empty() {
                return Err(ClientError::EmptyCompletion.into());
            }
            cache.put(&prompt, &text)?;
            (text, client.source())
        }
    };
    Ok(ReformulatedQuery {
        query_id: query.query_id.clone(),
        original_text: query.text.clone(),
        reformulated_text: text,
        source,
    })
}

/// One record of the reformulated-corpus file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub query_id: String,
    pub original: String,
    pub reformulated: String,
    pub steps: InstructionSequence,
    pub source: Source,
}

impl CorpusEntry {
    /// Parses the reformulation, falling back to a single step. Returns the
    /// entry and whether the fallback was taken.
    pub fn from_reformulation(r: &ReformulatedQuery) -> Result<(Self, bool), ReformulateError> {
        let (steps, fallback) = parse_or_fallback(&r.reformulated_text)?;
        let entry = CorpusEntry {
            query_id: r.query_id.clone(),
            original: r.original_text.clone(),
            reformulated: r.reformulated_text.clone(),
            steps,
            source: r.source,
        };
        Ok((entry, fallback))
    }
}

/// Writes entries sorted by query id.
pub fn save_corpus(entries: &[CorpusEntry], path: impl AsRef<Path>) -> Result<(), ReformulateError> {
    let path = path.as_ref();
    let mut sorted: Vec<&CorpusEntry> = entries.iter().collect();
    sorted.sort_by(|a, b| a.query_id.cmp(&b.query_id));
    let json = serde_json::to_string_pretty(&sorted).expect("corpus serializes");
    std::fs::write(path, json + "\n")
        .map_err(|e| ReformulateError::Corpus { path: path.into(), message: e.to_string() })
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<CorpusEntry>, ReformulateError> {
    let path = path.as_ref();
    let corpus_err = |message: String| ReformulateError::Corpus { path: path.into(), message };
    let text = std::fs::read_to_string(path).map_err(|e| corpus_err(e.to_string()))?;
    serde_json::from_str(&text).map_err(|e| corpus_err(e.to_string()))
}
