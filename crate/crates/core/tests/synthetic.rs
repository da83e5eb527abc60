use std::collections::BTreeMap;

use momentforge::evaluate::{aggregate, MetricSpec};
use momentforge::ingest::{synth_corpus, AnnotationSet, ClipAnnotations, SynthCorpus, SynthLayout, SynthSpec};
use momentforge::localize::{nms, Localizer, Prediction};
use momentforge::reformulate::{build_prompt, mock_complete, parse_instructions, Relation, DEFAULT_MODEL};
use momentforge::{iou, TemporalInterval};

/// Annotations restricted to the single-step queries (one per event).
fn single_step_subset(corpus: &SynthCorpus) -> AnnotationSet {
    let clips = corpus
        .annotations
        .clips()
        .iter()
        .map(|c| ClipAnnotations {
            clip: c.clip.clone(),
            annotations: c.annotations.iter().filter(|a| !a.query.text.contains(" after ")).cloned().collect(),
        })
        .collect();
    AnnotationSet::new(clips).unwrap()
}

fn single_step_recall(noise_scale: f64) -> f64 {
    let corpus = synth_corpus(&SynthSpec { noise_scale, ..SynthSpec::default() }).unwrap();
    let subset = single_step_subset(&corpus);
    assert_eq!(subset.query_count(), 40);
    let loc = Localizer::default();
    let mut results = BTreeMap::new();
    for (fm, clip) in corpus.features.iter().zip(subset.clips()) {
        for a in &clip.annotations {
            let q = loc.embedder.embed(&a.query.text);
            results.insert(a.query.query_id.clone(), loc.localize_single(fm, &clip.clip, &q, 5).unwrap());
        }
    }
    let spec = MetricSpec::new(vec![1], vec![0.5]).unwrap();
    aggregate("single", &results, &subset, &spec).unwrap().cells[0].recall_pct
}

#[test]
fn noise_free_recovery_is_total() {
    assert_eq!(single_step_recall(0.0), 100.0);
}

/// Brute force over every candidate of every window: the rank-1 span of the
/// noise-free corpus has the best achievable score.
#[test]
fn rank_one_is_the_brute_force_argmax() {
    let corpus = synth_corpus(&SynthSpec { num_clips: 4, ..SynthSpec::default() }).unwrap();
    let loc = Localizer::default();
    for (fm, clip) in corpus.features.iter().zip(corpus.annotations.clips()) {
        for a in &clip.annotations {
            let q = loc.embedder.embed(&a.query.text);
            let pool = loc.candidate_pool(fm, &clip.clip, &q).unwrap();
            let best = pool.iter().map(|p| p.score).fold(f64::NEG_INFINITY, f64::max);
            let top = loc.localize_single(fm, &clip.clip, &q, 1).unwrap();
            assert_eq!(top[0].score, best);
            assert_eq!(nms(&pool, 0.5)[0], top[0]);
        }
    }
}

#[test]
fn stepwise_resolves_repeated_events() {
    let spec = SynthSpec { layout: SynthLayout::Ambiguous, events_per_clip: 3, ..SynthSpec::default() };
    let corpus = synth_corpus(&spec).unwrap();
    let loc = Localizer::default();
    let (mut single_hits, mut step_hits, mut total) = (0, 0, 0);
    for (fm, clip) in corpus.features.iter().zip(corpus.annotations.clips()) {
        for a in clip.annotations.iter().skip(1) {
            let out = mock_complete(&build_prompt(&a.query, DEFAULT_MODEL, 0.0).unwrap());
            let seq = parse_instructions(&out).unwrap();
            assert_eq!(seq.len(), 2);
            let joined = loc.embedder.embed(&seq.joined_description());
            let single = loc.localize_single(fm, &clip.clip, &joined, 1).unwrap();
            let step = loc.localize_stepwise(fm, &clip.clip, &seq, 1).unwrap();
            assert!(!step.fallback);
            let anchor = step.anchors[0];
            let p = step.predictions[0].interval;
            match seq.steps()[1].relation {
                Relation::After => assert!(p.start() >= anchor.end()),
                Relation::Before => assert!(p.end() <= anchor.start()),
                Relation::None => unreachable!(),
            }
            total += 1;
            single_hits += usize::from(iou(&single[0].interval, &a.ground_truth) > 0.5);
            step_hits += usize::from(iou(&p, &a.ground_truth) > 0.5);
        }
    }
    assert_eq!(total, 40);
    assert!(step_hits > single_hits, "stepwise {step_hits} vs single {single_hits}");
    assert_eq!(step_hits, total);
}

#[test]
fn after_query_lands_on_later_event() {
    let corpus = synth_corpus(&SynthSpec { num_clips: 5, ..SynthSpec::default() }).unwrap();
    let loc = Localizer::default();
    for (fm, clip) in corpus.features.iter().zip(corpus.annotations.clips()) {
        let a = &clip.annotations[2];
        let seq = parse_instructions(&mock_complete(&build_prompt(&a.query, DEFAULT_MODEL, 0.0).unwrap())).unwrap();
        let r = loc.localize_stepwise(fm, &clip.clip, &seq, 5).unwrap();
        let top: TemporalInterval = r.predictions[0].interval;
        assert!(top.intersection_length(&a.ground_truth) > 0.0);
        assert!(top.start() >= r.anchors[0].end());
        let _: &[Prediction] = &r.predictions;
    }
}
