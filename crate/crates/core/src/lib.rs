//! Moment localization tooling for natural-language video queries.
//!
//! The crate is split along the pipeline:
//!
//! - [`domain`]: temporal intervals, clips, queries and annotations.
//! - [`ingest`]: annotation / feature file IO, synthetic corpora, training windows.
//! - [`reformulate`]: prompt construction, chat clients, completion cache, instruction parsing.
//! - [`localize`]: sliding windows, 2D candidate maps, scoring, step-wise localization, NMS.
//! - [`evaluate`]: `R@n, IoU=m` recall, corpus word statistics, comparison reports.

pub mod domain;
pub mod evaluate;
pub mod ingest;
pub mod localize;
pub mod reformulate;

pub use domain::{iou, Annotation, ClipMeta, DomainError, Query, TemporalInterval};
