//! The 2D temporal candidate map: cell `(i, j)` with `i <= j` is the moment
//! spanning segments `i..=j` of a window.

use ndarray::{Array1, Array2};

use super::embed::QueryEmbedding;
use super::LocalizeError;
use crate::domain::TemporalInterval;
use crate::ingest::FeatureMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CandidateMap {
    num_segments: usize,
}

impl CandidateMap {
    pub fn num_segments(&self) -> usize {
        self.num_segments
    }

    pub fn is_valid(&self, i: usize, j: usize) -> bool {
        i <= j && j < self.num_segments
    }

    /// Number of valid cells, `k(k+1)/2`.
    pub fn len(&self) -> usize {
        self.num_segments * (self.num_segments + 1) / 2
    }

    pub fn is_empty(&self) -> bool {
        self.num_segments == 0
    }

    /// Valid cells in row-major order.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let k = self.num_segments;
        (0..k).flat_map(move |i| (i..k).map(move |j| (i, j)))
    }

    /// Position of `(i, j)` in [`cells`](Self::cells) order.
    fn offset(&self, i: usize, j: usize) -> usize {
        i * self.num_segments - i * i.saturating_sub(1) / 2 + (j - i)
    }
}

/// Full upper-triangular map over `k` segments.
pub fn build_candidate_map(k: usize) -> CandidateMap {
    assert!(k >= 1, "candidate map needs at least one segment");
    CandidateMap { num_segments: k }
}

/// Time span of cell `(i, j)` inside `window` split into `k` equal segments.
pub fn candidate_interval(
    i: usize,
    j: usize,
    window: &TemporalInterval,
    k: usize,
) -> Result<TemporalInterval, LocalizeError> {
    if !(i <= j && j < k) {
        return Err(LocalizeError::OutOfTriangle { i, j, k });
    }
    let len = window.length();
    let start = window.start() + i as f64 * len / k as f64;
    let end = if j + 1 == k { window.end() } else { window.start() + (j + 1) as f64 * len / k as f64 };
    Ok(TemporalInterval::new(start, end).expect("ordered cell span"))
}

/// Pools feature steps into `k` equal sub-spans of `window`.
///
/// A step belongs to the sub-span containing its center. Sub-spans that
/// receive no step copy the step whose center is nearest their midpoint.
pub fn segment_features(fm: &FeatureMatrix, window: &TemporalInterval, k: usize) -> Array2<f64> {
    assert!(k >= 1, "need at least one segment");
    let dim = fm.dim();
    let mut sums = Array2::<f64>::zeros((k, dim));
    let mut counts = vec![0usize; k];
    let seg_len = window.length() / k as f64;

    for t in 0..fm.num_steps() {
        let c = fm.step_center(t);
        if c < window.start() || c > window.end() {
            continue;
        }
        let idx = if seg_len > 0.0 { (((c - window.start()) / seg_len) as usize).min(k - 1) } else { 0 };
        let mut row = sums.row_mut(idx);
        row.zip_mut_with(&fm.row(t), |s, v| *s += f64::from(*v));
        counts[idx] += 1;
    }

    for (idx, &n) in counts.iter().enumerate() {
        if n > 0 {
            sums.row_mut(idx).mapv_inplace(|s| s / n as f64);
        } else {
            let mid = window.start() + (idx as f64 + 0.5) * seg_len;
            let nearest = ((mid / fm.step_seconds() - 0.5).round().max(0.0) as usize).min(fm.num_steps() - 1);
            sums.row_mut(idx).assign(&fm.row(nearest).mapv(f64::from));
        }
    }
    sums
}

/// Scores for every valid cell of a candidate map.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMap {
    map: CandidateMap,
    scores: Vec<f64>,
}

impl ScoreMap {
    /// `scores` must be in [`CandidateMap::cells`] order and finite.
    pub fn new(map: CandidateMap, scores: Vec<f64>) -> Result<Self, LocalizeError> {
        if scores.len() != map.len() {
            return Err(LocalizeError::Config(format!("score map needs {} scores, got {}", map.len(), scores.len())));
        }
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(LocalizeError::Config("non-finite candidate score".into()));
        }
        Ok(Self { map, scores })
    }

    pub fn candidate_map(&self) -> &CandidateMap {
        &self.map
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.map.is_valid(i, j).then(|| self.scores[self.map.offset(i, j)])
    }

    /// `((i, j), score)` for every valid cell.
    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        self.map.cells().zip(self.scores.iter().copied())
    }

    /// Highest-scoring cell; ties go to the earlier cell in row-major order.
    pub fn argmax(&self) -> (usize, usize) {
        self.iter()
            .fold(None::<((usize, usize), f64)>, |best, (c, s)| match best {
                Some((_, bs)) if bs >= s => best,
                _ => Some((c, s)),
            })
            .expect("candidate map is never empty")
            .0
    }
}

/// Scores every candidate of a window from its segment features.
pub trait CandidateScorer: Send + Sync {
    fn score(
        &self,
        segments: &Array2<f64>,
        map: &CandidateMap,
        query: &QueryEmbedding,
    ) -> Result<ScoreMap, LocalizeError>;
}

/// Cosine similarity between the query and the mean of a candidate's segments.
#[derive(Debug, Clone, Copy, Default)]
pub struct CosineScorer;

impl CandidateScorer for CosineScorer {
    fn score(
        &self,
        segments: &Array2<f64>,
        map: &CandidateMap,
        query: &QueryEmbedding,
    ) -> Result<ScoreMap, LocalizeError> {
        score_candidates(segments, map, query)
    }
}

fn cosine(a: &Array1<f64>, b: &Array1<f64>) -> f64 {
    let na = a.dot(a).sqrt();
    let nb = b.dot(b).sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (a.dot(b) / (na * nb)).clamp(-1.0, 1.0)
}

/// Cosine score of each valid cell's mean segment feature against `query`.
pub fn score_candidates(
    segments: &Array2<f64>,
    map: &CandidateMap,
    query: &QueryEmbedding,
) -> Result<ScoreMap, LocalizeError> {
    let (k, dim) = segments.dim();
    if query.dim() != dim {
        return Err(LocalizeError::DimensionMismatch { features: dim, query: query.dim() });
    }
    if k != map.num_segments() {
        return Err(LocalizeError::Config(format!("{k} segment rows for a {}-segment map", map.num_segments())));
    }
    let q = Array1::from(query.values().to_vec());
    let mut scores = Vec::with_capacity(map.len());
    for i in 0..k {
        let mut sum = Array1::<f64>::zeros(dim);
        for j in i..k {
            sum += &segments.row(j);
            let mean = &sum / (j - i + 1) as f64;
            scores.push(cosine(&mean, &q));
        }
    }
    ScoreMap::new(*map, scores)
}
