use std::cmp::Ordering;

use super::Prediction;
use crate::domain::iou;

/// Ranking order: higher score first, then earlier start, then longer span.
pub fn rank_order(a: &Prediction, b: &Prediction) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then(a.interval.start().total_cmp(&b.interval.start()))
        .then(b.interval.length().total_cmp(&a.interval.length()))
}

/// Greedy non-maximum suppression. Keeps the best remaining prediction and
/// drops every other whose IoU with it exceeds `iou_threshold`.
pub fn nms(preds: &[Prediction], iou_threshold: f64) -> Vec<Prediction> {
    let mut sorted = preds.to_vec();
    sorted.sort_by(rank_order);
    let mut kept: Vec<Prediction> = Vec::new();
    for p in sorted {
        if kept.iter().all(|k| iou(&k.interval, &p.interval) <= iou_threshold) {
            kept.push(p);
        }
    }
    kept
}
