//! Loading annotation and feature files, synthetic corpus generation, and
//! training-window selection.

mod annotations;
mod features;
mod synth;

pub use annotations::{load_annotations, save_annotations, AnnotationSet, ClipAnnotations};
pub use features::{load_features, save_features, FeatureMatrix, FEATURE_MAGIC};
pub use synth::{save_corpus, synth_corpus, SynthCorpus, SynthLayout, SynthSpec};

use std::path::PathBuf;

use thiserror::Error;

use crate::domain::{DomainError, TemporalInterval};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed annotation file {path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("invalid record {record}: {reason}")]
    Validation { record: String, reason: String },
    #[error("bad magic in feature file {path}: expected \"MLF1\"")]
    BadMagic { path: PathBuf },
    #[error("truncated feature file {path}: expected {expected} payload bytes, found {found}")]
    Truncated { path: PathBuf, expected: usize, found: usize },
    #[error("feature file {path} has {extra} trailing bytes after the payload")]
    TrailingBytes { path: PathBuf, extra: usize },
    #[error("non-finite feature value at step {step}, dim {dim}")]
    NonFinite { step: usize, dim: usize },
    #[error("feature matrix must have positive dimensions, got T={num_steps}, D={dim}, step={step_seconds}s")]
    BadShape { num_steps: usize, dim: usize, step_seconds: f32 },
    #[error("infeasible synthetic spec: {0}")]
    Infeasible(String),
}

impl IngestError {
    fn validation(record: impl Into<String>, reason: impl std::fmt::Display) -> Self {
        IngestError::Validation { record: record.into(), reason: reason.to_string() }
    }
}

impl From<(String, DomainError)> for IngestError {
    fn from((record, err): (String, DomainError)) -> Self {
        IngestError::validation(record, err)
    }
}

/// Keeps the windows that overlap `gt` with positive length, in input order.
/// Windows that only touch `gt` at a boundary are dropped.
pub fn training_window_filter(windows: &[TemporalInterval], gt: &TemporalInterval) -> Vec<TemporalInterval> {
    windows.iter().filter(|w| w.intersection_length(gt) > 0.0).copied().collect()
}
