use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::EvaluateError;
use crate::domain::{iou, TemporalInterval};
use crate::ingest::AnnotationSet;
use crate::localize::Prediction;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSpec {
    ranks: Vec<usize>,
    iou_thresholds: Vec<f64>,
}

impl Default for MetricSpec {
    fn default() -> Self {
        Self { ranks: vec![1, 5], iou_thresholds: vec![0.3, 0.5] }
    }
}

impl MetricSpec {
    pub fn new(ranks: Vec<usize>, iou_thresholds: Vec<f64>) -> Result<Self, EvaluateError> {
        if ranks.is_empty() || iou_thresholds.is_empty() {
            return Err(EvaluateError::Spec("need at least one rank and one threshold".into()));
        }
        if ranks[0] == 0 || ranks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(EvaluateError::Spec(format!("ranks must be positive and strictly increasing, got {ranks:?}")));
        }
        let in_unit = |m: f64| m > 0.0 && m <= 1.0;
        if !iou_thresholds.iter().all(|&m| in_unit(m)) || iou_thresholds.windows(2).any(|w| w[0] >= w[1]) {
            return Err(EvaluateError::Spec(format!(
                "thresholds must lie in (0, 1] and strictly increase, got {iou_thresholds:?}"
            )));
        }
        Ok(Self { ranks, iou_thresholds })
    }

    pub fn ranks(&self) -> &[usize] {
        &self.ranks
    }

    pub fn iou_thresholds(&self) -> &[f64] {
        &self.iou_thresholds
    }

    /// Cell order: thresholds ascending, ranks ascending within each.
    pub fn cells(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.iou_thresholds.iter().flat_map(|&m| self.ranks.iter().map(move |&n| (n, m)))
    }
}

/// True when one of the first `n` predictions has IoU strictly above `m`.
pub fn hit(preds: &[Prediction], gt: &TemporalInterval, n: usize, m: f64) -> bool {
    preds.iter().take(n).any(|p| iou(&p.interval, gt) > m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricCell {
    pub n: usize,
    pub iou: f64,
    pub recall_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsTable {
    pub label: String,
    pub query_count: usize,
    pub cells: Vec<MetricCell>,
}

impl MetricsTable {
    /// A table from already computed percentages, in [`MetricSpec::cells`] order.
    pub fn from_values(
        label: impl Into<String>,
        query_count: usize,
        spec: &MetricSpec,
        values: &[f64],
    ) -> Result<Self, EvaluateError> {
        let cells: Vec<MetricCell> =
            spec.cells().zip(values).map(|((n, iou), &recall_pct)| MetricCell { n, iou, recall_pct }).collect();
        if cells.len() != values.len() || cells.len() != spec.ranks.len() * spec.iou_thresholds.len() {
            return Err(EvaluateError::Spec(format!("expected {} values, got {}", cells.len(), values.len())));
        }
        if values.iter().any(|v| !(0.0..=100.0).contains(v)) {
            return Err(EvaluateError::Spec("percentages must lie in [0, 100]".into()));
        }
        Ok(Self { label: label.into(), query_count, cells })
    }

    pub fn get(&self, n: usize, iou: f64) -> Option<f64> {
        self.cells.iter().find(|c| c.n == n && c.iou == iou).map(|c| c.recall_pct)
    }

    /// The (n, IoU) layout of the cells.
    pub fn layout(&self) -> Vec<(usize, f64)> {
        self.cells.iter().map(|c| (c.n, c.iou)).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("metrics serialize")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), EvaluateError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json() + "\n").map_err(|e| EvaluateError::Io(format!("{}: {e}", path.display())))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, EvaluateError> {
        let path = path.as_ref();
        let io = |e: String| EvaluateError::Io(format!("{}: {e}", path.display()));
        let text = std::fs::read_to_string(path).map_err(|e| io(e.to_string()))?;
        serde_json::from_str(&text).map_err(|e| io(e.to_string()))
    }
}

/// Recall at every (n, m) of `spec` over all annotated queries. Queries
/// without an entry in `results` count as misses.
pub fn aggregate(
    label: impl Into<String>,
    results: &BTreeMap<String, Vec<Prediction>>,
    annotations: &AnnotationSet,
    spec: &MetricSpec,
) -> Result<MetricsTable, EvaluateError> {
    let known: BTreeSet<&str> = annotations.iter().map(|(_, a)| a.query.query_id.as_str()).collect();
    let unknown: Vec<String> = results.keys().filter(|id| !known.contains(id.as_str())).cloned().collect();
    if !unknown.is_empty() {
        return Err(EvaluateError::UnknownQueries(unknown));
    }
    let total = annotations.query_count();
    let empty = Vec::new();
    let cells = spec
        .cells()
        .map(|(n, m)| {
            let hits = annotations
                .iter()
                .filter(|(_, a)| hit(results.get(&a.query.query_id).unwrap_or(&empty), &a.ground_truth, n, m))
                .count();
            let recall_pct = if total == 0 { 0.0 } else { 100.0 * hits as f64 / total as f64 };
            MetricCell { n, iou: m, recall_pct }
        })
        .collect();
    Ok(MetricsTable { label: label.into(), query_count: total, cells })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Annotation, ClipMeta, Query};
    use crate::ingest::ClipAnnotations;
    use proptest::prelude::*;

    fn iv(s: f64, e: f64) -> TemporalInterval {
        TemporalInterval::new(s, e).unwrap()
    }

    fn pred(s: f64, e: f64) -> Prediction {
        Prediction { interval: iv(s, e), score: 0.0, source_window: 0 }
    }

    fn annotations(gts: &[(f64, f64)]) -> AnnotationSet {
        let clip = ClipMeta::new("c", 100.0).unwrap();
        let annotations = gts
            .iter()
            .enumerate()
            .map(|(i, &(s, e))| {
                Annotation::new(Query::new(format!("q{i}"), "where", None).unwrap(), iv(s, e), &clip).unwrap()
            })
            .collect();
        AnnotationSet::new(vec![ClipAnnotations { clip, annotations }]).unwrap()
    }

    #[test]
    fn hit_examples() {
        assert!(hit(&[pred(10.0, 20.0)], &iv(10.0, 20.0), 1, 0.5));
        let preds = [pred(0.0, 5.0), pred(10.0, 20.0)];
        assert!(!hit(&preds, &iv(10.0, 20.0), 1, 0.5));
        assert!(hit(&preds, &iv(10.0, 20.0), 5, 0.5));
        assert!(!hit(&[], &iv(10.0, 20.0), 5, 0.1));
    }

    #[test]
    fn hit_is_strict() {
        // IoU exactly 0.5
        assert!(!hit(&[pred(0.0, 10.0)], &iv(0.0, 20.0), 1, 0.5));
        assert!(hit(&[pred(0.0, 10.0)], &iv(0.0, 20.0), 1, 0.49));
    }

    #[test]
    fn half_hits() {
        let ann = annotations(&[(10.0, 20.0), (50.0, 60.0)]);
        let spec = MetricSpec::new(vec![1], vec![0.5]).unwrap();
        let mut results = BTreeMap::new();
        results.insert("q0".to_string(), vec![pred(10.0, 20.0)]);
        results.insert("q1".to_string(), vec![pred(0.0, 5.0)]);
        assert_eq!(aggregate("x", &results, &ann, &spec).unwrap().cells[0].recall_pct, 50.0);
        // a missing entry is a miss as well
        results.remove("q1");
        assert_eq!(aggregate("x", &results, &ann, &spec).unwrap().get(1, 0.5), Some(50.0));
    }

    #[test]
    fn all_exact_is_full_recall() {
        let ann = annotations(&[(10.0, 20.0), (50.0, 60.0)]);
        let results: BTreeMap<_, _> =
            [("q0".to_string(), vec![pred(10.0, 20.0)]), ("q1".to_string(), vec![pred(50.0, 60.0)])].into();
        let table = aggregate("x", &results, &ann, &MetricSpec::default()).unwrap();
        assert!(table.cells.iter().all(|c| c.recall_pct == 100.0));
        assert_eq!(table.layout(), vec![(1, 0.3), (5, 0.3), (1, 0.5), (5, 0.5)]);
    }

    #[test]
    fn unknown_ids_are_listed() {
        let ann = annotations(&[(10.0, 20.0)]);
        let results: BTreeMap<_, _> = [("zz".to_string(), vec![]), ("yy".to_string(), vec![])].into();
        match aggregate("x", &results, &ann, &MetricSpec::default()) {
            Err(EvaluateError::UnknownQueries(ids)) => assert_eq!(ids, vec!["yy", "zz"]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn spec_validation() {
        assert!(MetricSpec::new(vec![5, 1], vec![0.3]).is_err());
        assert!(MetricSpec::new(vec![0, 1], vec![0.3]).is_err());
        assert!(MetricSpec::new(vec![1], vec![0.0]).is_err());
        assert!(MetricSpec::new(vec![1], vec![0.5, 0.3]).is_err());
        assert!(MetricSpec::new(vec![1], vec![1.0]).is_ok());
    }

    #[test]
    fn table_json_round_trip() {
        let t = MetricsTable::from_values("base", 4, &MetricSpec::default(), &[4.57, 12.88, 2.86, 8.11]).unwrap();
        let back: MetricsTable = serde_json::from_str(&t.to_json()).unwrap();
        assert_eq!(back, t);
        assert!(MetricsTable::from_values("b", 1, &MetricSpec::default(), &[1.0]).is_err());
    }

    proptest! {
        #[test]
        fn hit_monotone(
            raw in proptest::collection::vec((0.0f64..90.0, 0.0f64..10.0), 0..12),
            g in (0.0f64..90.0, 0.0f64..10.0),
            n in 1usize..10, dn in 0usize..5,
            m in 0.0f64..1.0, dm in 0.0f64..1.0,
        ) {
            let preds: Vec<_> = raw.iter().map(|&(s, l)| pred(s, s + l)).collect();
            let gt = iv(g.0, g.0 + g.1);
            let m_low = m * dm;
            if hit(&preds, &gt, n, m) {
                prop_assert!(hit(&preds, &gt, n + dn, m_low));
            }
        }
    }
}
