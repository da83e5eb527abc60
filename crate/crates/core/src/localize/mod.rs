//! Sliding-window moment localization over precomputed clip features.
//!
//! Each window is split into `k` segments, every upper-triangular cell of
//! the resulting 2D map is scored against the query embedding, and the
//! cells of all windows are pooled, de-duplicated and merged with NMS.

mod candidate;
mod embed;
mod nms;
mod window;

pub use candidate::{
    build_candidate_map, candidate_interval, score_candidates, segment_features, CandidateMap, CandidateScorer,
    CosineScorer, ScoreMap,
};
pub use embed::{
    embed_text, token_slot, tokenize, QueryEmbedding, TextEmbedder, DEFAULT_EMBED_DIM, DEFAULT_EMBED_SEED,
};
pub use nms::{nms, rank_order};
pub use window::{make_windows, WindowConfig};

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{ClipMeta, TemporalInterval};
use crate::ingest::{FeatureMatrix, IngestError};
use crate::reformulate::{InstructionSequence, Relation};

pub const DEFAULT_NMS_THRESHOLD: f64 = 0.5;
pub const DEFAULT_TOP_K: usize = 5;

#[derive(Debug, Error)]
pub enum LocalizeError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("cell ({i}, {j}) is outside the {k}-segment candidate triangle")]
    OutOfTriangle { i: usize, j: usize, k: usize },
    #[error("feature dim {features} does not match query embedding dim {query}")]
    DimensionMismatch { features: usize, query: usize },
    #[error(transparent)]
    Features(#[from] IngestError),
    #[error("prediction file {path}: {message}")]
    Dump { path: std::path::PathBuf, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub interval: TemporalInterval,
    pub score: f64,
    pub source_window: usize,
}

/// Ranked predictions from step-wise localization.
#[derive(Debug, Clone, PartialEq)]
pub struct StepwiseResult {
    pub predictions: Vec<Prediction>,
    /// Set when a relation constraint left no candidates and the
    /// unconstrained ranking was used instead.
    pub fallback: bool,
    /// Rank-1 moment of each step before the last.
    pub anchors: Vec<TemporalInterval>,
}

pub struct Localizer<S: CandidateScorer = CosineScorer> {
    pub window: WindowConfig,
    pub nms_threshold: f64,
    pub embedder: TextEmbedder,
    scorer: S,
}

impl Default for Localizer<CosineScorer> {
    fn default() -> Self {
        Self {
            window: WindowConfig::default(),
            nms_threshold: DEFAULT_NMS_THRESHOLD,
            embedder: TextEmbedder::default(),
            scorer: CosineScorer,
        }
    }
}

impl Localizer<CosineScorer> {
    pub fn new(window: WindowConfig, nms_threshold: f64, embedder: TextEmbedder) -> Result<Self, LocalizeError> {
        Localizer::with_scorer(window, nms_threshold, embedder, CosineScorer)
    }
}

impl<S: CandidateScorer> Localizer<S> {
    pub fn with_scorer(
        window: WindowConfig,
        nms_threshold: f64,
        embedder: TextEmbedder,
        scorer: S,
    ) -> Result<Self, LocalizeError> {
        window.validate()?;
        if !(0.0..=1.0).contains(&nms_threshold) {
            return Err(LocalizeError::Config(format!("nms threshold {nms_threshold} outside [0, 1]")));
        }
        if embedder.dim == 0 {
            return Err(LocalizeError::Config("embedding dim must be positive".into()));
        }
        Ok(Self { window, nms_threshold, embedder, scorer })
    }

    /// Every candidate of every window in clip coordinates, ranked by
    /// [`rank_order`], with exact duplicate spans removed.
    pub fn candidate_pool(
        &self,
        fm: &FeatureMatrix,
        clip: &ClipMeta,
        query: &QueryEmbedding,
    ) -> Result<Vec<Prediction>, LocalizeError> {
        fm.check_clip(clip)?;
        let k = self.window.segments_per_window;
        let map = build_candidate_map(k);
        let bounds = clip.bounds();
        let mut pool = Vec::new();
        for (w_idx, window) in make_windows(clip.duration(), &self.window).iter().enumerate() {
            let segments = segment_features(fm, window, k);
            let scores = self.scorer.score(&segments, &map, query)?;
            for ((i, j), score) in scores.iter() {
                let interval = candidate_interval(i, j, window, k)?.clamp(&bounds);
                pool.push(Prediction { interval, score, source_window: w_idx });
            }
        }
        pool.sort_by(rank_order);
        pool.dedup_by(|later, earlier| later.interval == earlier.interval);
        // dedup_by only removes adjacent runs; equal spans with different scores are
        // separated, so sweep the rest with a set of seen spans.
        let mut seen = std::collections::HashSet::new();
        pool.retain(|p| seen.insert((p.interval.start().to_bits(), p.interval.end().to_bits())));
        Ok(pool)
    }

    fn finalize(&self, pool: &[Prediction], top_k: usize) -> Vec<Prediction> {
        let mut out = nms(pool, self.nms_threshold);
        out.truncate(top_k);
        out
    }

    /// Top-`top_k` moments for a single query embedding.
    pub fn localize_single(
        &self,
        fm: &FeatureMatrix,
        clip: &ClipMeta,
        query: &QueryEmbedding,
        top_k: usize,
    ) -> Result<Vec<Prediction>, LocalizeError> {
        check_top_k(top_k)?;
        let pool = self.candidate_pool(fm, clip, query)?;
        Ok(self.finalize(&pool, top_k))
    }

    /// Localizes each step in turn. A step with an AFTER (BEFORE) relation
    /// only keeps candidates starting at or after (ending at or before) the
    /// previous step's rank-1 moment.
    pub fn localize_stepwise(
        &self,
        fm: &FeatureMatrix,
        clip: &ClipMeta,
        steps: &InstructionSequence,
        top_k: usize,
    ) -> Result<StepwiseResult, LocalizeError> {
        check_top_k(top_k)?;
        let mut anchor: Option<TemporalInterval> = None;
        let mut anchors = Vec::new();
        let mut fallback = false;
        let last = steps.len() - 1;
        for (idx, step) in steps.steps().iter().enumerate() {
            let query = self.embedder.embed(&step.description);
            let pool = self.candidate_pool(fm, clip, &query)?;
            let constrained: Vec<Prediction> = match (anchor, step.relation) {
                (Some(a), Relation::After) => pool.iter().filter(|p| p.interval.start() >= a.end()).copied().collect(),
                (Some(a), Relation::Before) => pool.iter().filter(|p| p.interval.end() <= a.start()).copied().collect(),
                _ => pool.clone(),
            };
            let pool = if constrained.is_empty() {
                fallback = true;
                pool
            } else {
                constrained
            };
            if idx == last {
                return Ok(StepwiseResult { predictions: self.finalize(&pool, top_k), fallback, anchors });
            }
            let best = pool[0].interval;
            anchors.push(best);
            anchor = Some(best);
        }
        unreachable!("instruction sequences have at least one step")
    }
}

fn check_top_k(top_k: usize) -> Result<(), LocalizeError> {
    if top_k == 0 {
        return Err(LocalizeError::Config("top_k must be at least 1".into()));
    }
    Ok(())
}

/// One line of the prediction dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub query_id: String,
    pub rank: usize,
    pub start_s: f64,
    pub end_s: f64,
    pub score: f64,
    pub fallback: bool,
}

impl PredictionRecord {
    /// Records for a ranked prediction list, ranks starting at 1.
    pub fn from_ranked(query_id: &str, preds: &[Prediction], fallback: bool) -> Vec<Self> {
        preds
            .iter()
            .enumerate()
            .map(|(r, p)| PredictionRecord {
                query_id: query_id.to_string(),
                rank: r + 1,
                start_s: p.interval.start(),
                end_s: p.interval.end(),
                score: p.score,
                fallback,
            })
            .collect()
    }
}

/// Writes records sorted by query id, then rank.
pub fn save_predictions(records: &[PredictionRecord], path: impl AsRef<Path>) -> Result<(), LocalizeError> {
    let path = path.as_ref();
    let mut sorted = records.to_vec();
    sorted.sort_by(|a, b| a.query_id.cmp(&b.query_id).then(a.rank.cmp(&b.rank)));
    let json = serde_json::to_string_pretty(&sorted).expect("prediction records serialize");
    std::fs::write(path, json + "\n").map_err(|e| LocalizeError::Dump { path: path.into(), message: e.to_string() })
}

pub fn load_predictions(path: impl AsRef<Path>) -> Result<Vec<PredictionRecord>, LocalizeError> {
    let path = path.as_ref();
    let err = |message: String| LocalizeError::Dump { path: path.into(), message };
    let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
    serde_json::from_str(&text).map_err(|e| err(e.to_string()))
}

/// Groups records into rank-ordered prediction lists per query id.
pub fn group_predictions(records: &[PredictionRecord]) -> Result<BTreeMap<String, Vec<Prediction>>, LocalizeError> {
    let mut grouped: BTreeMap<String, Vec<(usize, Prediction)>> = BTreeMap::new();
    for r in records {
        let interval = TemporalInterval::new(r.start_s, r.end_s)
            .map_err(|e| LocalizeError::Config(format!("query {} rank {}: {e}", r.query_id, r.rank)))?;
        grouped
            .entry(r.query_id.clone())
            .or_default()
            .push((r.rank, Prediction { interval, score: r.score, source_window: 0 }));
    }
    Ok(grouped
        .into_iter()
        .map(|(id, mut v)| {
            v.sort_by_key(|(rank, _)| *rank);
            (id, v.into_iter().map(|(_, p)| p).collect())
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    /// Background direction on dim 0, one planted direction per event.
    fn planted(duration: f64, step: f64, dim: usize, events: &[(f64, f64, usize)]) -> FeatureMatrix {
        let t = (duration / step).round() as usize;
        let values = Array2::from_shape_fn((t, dim), |(s, d)| {
            let c = (s as f64 + 0.5) * step;
            match events.iter().find(|(a, b, _)| c >= *a && c < *b) {
                Some((_, _, at)) => f32::from(d == *at),
                None => f32::from(d == 0),
            }
        });
        FeatureMatrix::new("clip", step as f32, values).unwrap()
    }

    fn onehot(dim: usize, at: usize) -> QueryEmbedding {
        let mut v = vec![0.0; dim];
        v[at] = 1.0;
        QueryEmbedding::new(v)
    }

    #[test]
    fn recovers_planted_event() {
        let fm = planted(100.0, 0.5, 8, &[(45.0, 60.0, 3)]);
        let clip = ClipMeta::new("clip", 100.0).unwrap();
        let loc = Localizer::default();
        let preds = loc.localize_single(&fm, &clip, &onehot(8, 3), 5).unwrap();
        assert_eq!(preds.len(), 5);
        assert_eq!(preds[0].interval, TemporalInterval::new(45.0, 60.0).unwrap());
        assert!(preds.windows(2).all(|w| w[0].score >= w[1].score));
        for p in &preds {
            assert!(clip.bounds().contains(&p.interval));
        }
        let one = loc.localize_single(&fm, &clip, &onehot(8, 3), 1).unwrap();
        assert_eq!(one.len(), 1);
    }

    #[test]
    fn short_clip_windows_do_not_duplicate() {
        // duration below one window: a single [0, 30] window
        let fm = planted(30.0, 0.5, 4, &[(10.0, 15.0, 2)]);
        let clip = ClipMeta::new("clip", 30.0).unwrap();
        let loc = Localizer::new(WindowConfig::default(), 1.0, TextEmbedder { dim: 4, seed: 0 }).unwrap();
        let preds = loc.localize_single(&fm, &clip, &onehot(4, 2), 136).unwrap();
        let mut spans: Vec<_> =
            preds.iter().map(|p| (p.interval.start().to_bits(), p.interval.end().to_bits())).collect();
        let n = spans.len();
        spans.sort();
        spans.dedup();
        assert_eq!(spans.len(), n);
    }

    #[test]
    fn rejects_zero_top_k_and_dim_mismatch() {
        let fm = planted(50.0, 1.0, 4, &[]);
        let clip = ClipMeta::new("clip", 50.0).unwrap();
        let loc = Localizer::default();
        assert!(matches!(loc.localize_single(&fm, &clip, &onehot(4, 1), 0), Err(LocalizeError::Config(_))));
        assert!(matches!(
            loc.localize_single(&fm, &clip, &onehot(5, 1), 1),
            Err(LocalizeError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn wrong_clip_is_rejected() {
        let fm = planted(50.0, 1.0, 4, &[]);
        let clip = ClipMeta::new("other", 50.0).unwrap();
        assert!(matches!(
            Localizer::default().localize_single(&fm, &clip, &onehot(4, 1), 1),
            Err(LocalizeError::Features(_))
        ));
    }

    #[test]
    fn records_group_by_query_and_rank() {
        let p = |s: f64| Prediction {
            interval: TemporalInterval::new(s, s + 1.0).unwrap(),
            score: 1.0 - s / 10.0,
            source_window: 0,
        };
        let mut recs = PredictionRecord::from_ranked("b", &[p(1.0), p(2.0)], false);
        recs.extend(PredictionRecord::from_ranked("a", &[p(3.0)], true));
        recs.reverse();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("preds.json");
        save_predictions(&recs, &path).unwrap();
        let back = load_predictions(&path).unwrap();
        assert_eq!(back[0].query_id, "a");
        assert_eq!((back[1].query_id.as_str(), back[1].rank), ("b", 1));
        let grouped = group_predictions(&back).unwrap();
        assert_eq!(grouped["b"][1].interval.start(), 2.0);
        assert!(back[0].fallback);
    }
}
