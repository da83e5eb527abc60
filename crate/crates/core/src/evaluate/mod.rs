//! Recall metrics, corpus word statistics and two-system comparison reports.

mod metrics;
mod report;
mod stats;

pub use metrics::{aggregate, hit, MetricCell, MetricSpec, MetricsTable};
pub use report::{compare_report, round2, CompareReport, ReportColumn, ReportRow};
pub use stats::{corpus_stats, CorpusStats, UNMATCHED};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvaluateError {
    #[error("invalid metric spec: {0}")]
    Spec(String),
    #[error("predictions for unannotated queries: {}", .0.join(", "))]
    UnknownQueries(Vec<String>),
    #[error("tables were computed with different metric specs")]
    SpecMismatch,
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("metrics file: {0}")]
    Io(String),
}
