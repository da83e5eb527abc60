//! Shared domain types: temporal intervals, clip metadata, queries and
//! ground-truth annotations.
//!
//! Time is measured in continuous seconds. Frame or feature-step views live
//! in [`crate::ingest`].

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("interval bounds must be finite, got [{start}, {end}]")]
    NonFinite { start: f64, end: f64 },
    #[error("interval start {start} is after end {end}")]
    Inverted { start: f64, end: f64 },
    #[error("clip id must not be empty")]
    EmptyClipId,
    #[error("clip duration must be positive and finite, got {0}")]
    BadDuration(f64),
    #[error("query text must contain at least one word")]
    EmptyQuery,
    #[error("ground truth [{start}, {end}] lies outside clip bounds [0, {duration}]")]
    OutsideClip { start: f64, end: f64, duration: f64 },
}

/// A closed span `[start, end]` in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "(f64, f64)", into = "(f64, f64)")]
pub struct TemporalInterval {
    start: f64,
    end: f64,
}

impl TemporalInterval {
    pub fn new(start: f64, end: f64) -> Result<Self, DomainError> {
        if !start.is_finite() || !end.is_finite() {
            return Err(DomainError::NonFinite { start, end });
        }
        if start > end {
            return Err(DomainError::Inverted { start, end });
        }
        Ok(Self { start, end })
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    pub fn length(&self) -> f64 {
        self.end - self.start
    }

    /// Length of the overlap with `other`; zero when disjoint or touching.
    pub fn intersection_length(&self, other: &TemporalInterval) -> f64 {
        (self.end.min(other.end) - self.start.max(other.start)).max(0.0)
    }

    pub fn contains(&self, other: &TemporalInterval) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    /// Intersects `self` with `bounds`. A disjoint interval collapses to the
    /// zero-length interval at the nearest bound.
    pub fn clamp(&self, bounds: &TemporalInterval) -> TemporalInterval {
        if self.end < bounds.start {
            return TemporalInterval { start: bounds.start, end: bounds.start };
        }
        if self.start > bounds.end {
            return TemporalInterval { start: bounds.end, end: bounds.end };
        }
        TemporalInterval { start: self.start.max(bounds.start), end: self.end.min(bounds.end) }
    }
}

impl TryFrom<(f64, f64)> for TemporalInterval {
    type Error = DomainError;

    fn try_from((start, end): (f64, f64)) -> Result<Self, Self::Error> {
        TemporalInterval::new(start, end)
    }
}

impl From<TemporalInterval> for (f64, f64) {
    fn from(t: TemporalInterval) -> Self {
        (t.start, t.end)
    }
}

impl std::fmt::Display for TemporalInterval {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{}, {}]", self.start, self.end)
    }
}

/// Temporal intersection-over-union.
///
/// Two identical zero-length intervals score 1; any other pair with an empty
/// union scores 0.
pub fn iou(a: &TemporalInterval, b: &TemporalInterval) -> f64 {
    let inter = a.intersection_length(b);
    let union = a.length() + b.length() - inter;
    if union <= 0.0 {
        return if a == b { 1.0 } else { 0.0 };
    }
    (inter / union).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipMeta {
    clip_id: String,
    duration: f64,
}

impl ClipMeta {
    pub fn new(clip_id: impl Into<String>, duration: f64) -> Result<Self, DomainError> {
        let clip_id = clip_id.into();
        if clip_id.is_empty() {
            return Err(DomainError::EmptyClipId);
        }
        if !(duration.is_finite() && duration > 0.0) {
            return Err(DomainError::BadDuration(duration));
        }
        Ok(Self { clip_id, duration })
    }

    pub fn clip_id(&self) -> &str {
        &self.clip_id
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    /// `[0, duration]`.
    pub fn bounds(&self) -> TemporalInterval {
        TemporalInterval { start: 0.0, end: self.duration }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Query {
    pub query_id: String,
    pub text: String,
    pub template_hint: Option<String>,
}

impl Query {
    pub fn new(
        query_id: impl Into<String>,
        text: impl Into<String>,
        template_hint: Option<String>,
    ) -> Result<Self, DomainError> {
        let text = text.into();
        if word_count(&text) == 0 {
            return Err(DomainError::EmptyQuery);
        }
        Ok(Self { query_id: query_id.into(), text, template_hint })
    }

    pub fn word_count(&self) -> usize {
        word_count(&self.text)
    }
}

/// Whitespace-delimited token count; punctuation stays attached to words.
pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub query: Query,
    pub ground_truth: TemporalInterval,
}

impl Annotation {
    /// Builds an annotation, checking the moment lies within `clip`.
    pub fn new(query: Query, ground_truth: TemporalInterval, clip: &ClipMeta) -> Result<Self, DomainError> {
        if ground_truth.start() < 0.0 || ground_truth.end() > clip.duration() {
            return Err(DomainError::OutsideClip {
                start: ground_truth.start(),
                end: ground_truth.end(),
                duration: clip.duration(),
            });
        }
        Ok(Self { query, ground_truth })
    }
}
