use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::IngestError;
use crate::domain::{Annotation, ClipMeta, Query, TemporalInterval};

#[derive(Debug, Clone, PartialEq)]
pub struct ClipAnnotations {
    pub clip: ClipMeta,
    pub annotations: Vec<Annotation>,
}

/// Validated clips with their queries and ground-truth moments.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AnnotationSet {
    clips: Vec<ClipAnnotations>,
}

impl AnnotationSet {
    /// Checks that clip and query ids are unique and every moment lies within
    /// its clip.
    pub fn new(clips: Vec<ClipAnnotations>) -> Result<Self, IngestError> {
        let mut clip_ids = HashSet::new();
        let mut query_ids = HashSet::new();
        for c in &clips {
            if !clip_ids.insert(c.clip.clip_id().to_string()) {
                return Err(IngestError::validation(format!("clip {}", c.clip.clip_id()), "duplicate clip_id"));
            }
            for a in &c.annotations {
                if a.ground_truth.start() < 0.0 || a.ground_truth.end() > c.clip.duration() {
                    return Err(IngestError::validation(
                        format!("query {}", a.query.query_id),
                        format!("moment {} outside clip {}", a.ground_truth, c.clip.clip_id()),
                    ));
                }
                if !query_ids.insert(a.query.query_id.clone()) {
                    return Err(IngestError::validation(format!("query {}", a.query.query_id), "duplicate query_id"));
                }
            }
        }
        Ok(Self { clips })
    }

    pub fn clips(&self) -> &[ClipAnnotations] {
        &self.clips
    }

    pub fn clip(&self, clip_id: &str) -> Option<&ClipAnnotations> {
        self.clips.iter().find(|c| c.clip.clip_id() == clip_id)
    }

    /// All annotations with their clip, in file order.
    pub fn iter(&self) -> impl Iterator<Item = (&ClipMeta, &Annotation)> {
        self.clips.iter().flat_map(|c| c.annotations.iter().map(move |a| (&c.clip, a)))
    }

    pub fn query_count(&self) -> usize {
        self.clips.iter().map(|c| c.annotations.len()).sum()
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct AnnotationFile {
    clips: Vec<ClipRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ClipRecord {
    clip_id: String,
    duration_s: f64,
    queries: Vec<QueryRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
struct QueryRecord {
    query_id: String,
    text: String,
    template: Option<String>,
    start_s: f64,
    end_s: f64,
}

fn from_file(file: AnnotationFile) -> Result<AnnotationSet, IngestError> {
    let mut clips = Vec::with_capacity(file.clips.len());
    for c in file.clips {
        let record = format!("clip {}", c.clip_id);
        let clip = ClipMeta::new(c.clip_id, c.duration_s).map_err(|e| (record, e))?;
        let mut annotations = Vec::with_capacity(c.queries.len());
        for q in c.queries {
            let record = format!("query {}", q.query_id);
            let gt = TemporalInterval::new(q.start_s, q.end_s).map_err(|e| (record.clone(), e))?;
            let query = Query::new(q.query_id, q.text, q.template).map_err(|e| (record.clone(), e))?;
            annotations.push(Annotation::new(query, gt, &clip).map_err(|e| (record, e))?);
        }
        clips.push(ClipAnnotations { clip, annotations });
    }
    AnnotationSet::new(clips)
}

fn to_file(set: &AnnotationSet) -> AnnotationFile {
    AnnotationFile {
        clips: set
            .clips
            .iter()
            .map(|c| ClipRecord {
                clip_id: c.clip.clip_id().to_string(),
                duration_s: c.clip.duration(),
                queries: c
                    .annotations
                    .iter()
                    .map(|a| QueryRecord {
                        query_id: a.query.query_id.clone(),
                        text: a.query.text.clone(),
                        template: a.query.template_hint.clone(),
                        start_s: a.ground_truth.start(),
                        end_s: a.ground_truth.end(),
                    })
                    .collect(),
            })
            .collect(),
    }
}

impl AnnotationSet {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&to_file(self)).expect("annotation file serializes")
    }
}

pub fn load_annotations(path: impl AsRef<Path>) -> Result<AnnotationSet, IngestError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| IngestError::Io { path: path.into(), source })?;
    let file: AnnotationFile =
        serde_json::from_str(&text).map_err(|source| IngestError::Parse { path: path.into(), source })?;
    from_file(file)
}

pub fn save_annotations(set: &AnnotationSet, path: impl AsRef<Path>) -> Result<(), IngestError> {
    let path = path.as_ref();
    std::fs::write(path, set.to_json() + "\n").map_err(|source| IngestError::Io { path: path.into(), source })
}
