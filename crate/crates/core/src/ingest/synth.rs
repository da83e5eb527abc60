//! Seeded synthetic corpora with planted events.
//!
//! Each event is a pseudo-word whose hashed embedding is written into the
//! feature rows inside its interval. Every other row carries a fixed
//! background direction. Query texts mention the event words, so a query
//! embedded with the same hashing lines up with its planted rows.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{save_annotations, save_features, AnnotationSet, ClipAnnotations, FeatureMatrix, IngestError};
use crate::domain::{Annotation, ClipMeta, Query, TemporalInterval};
use crate::localize::{token_slot, tokenize};
use crate::reformulate::{build_prompt, match_template, mock_complete, DEFAULT_MODEL};

const MIN_EVENT_S: f64 = 12.0;
const MAX_EVENT_S: f64 = 20.0;
const MARGIN_S: f64 = 2.0;
const BACKGROUND_TOKEN: &str = "background";

const SINGLE_FRAMES: [&str; 4] = [
    "Where is the {x}?",
    "Where did I put the {x}?",
    "In what location did I see the {x}?",
    "What did I put in the {x}?",
];

const PAIR_FRAMES: [&str; 2] = ["Where is the {y} after I used the {x}?", "Did I close the {y} after I used the {x}?"];

const BEFORE_FRAME: &str = "Where is the {y} before I used the {x}?";

/// How events are laid out within a clip.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SynthLayout {
    /// `events_per_clip` events, each with its own word.
    Distinct,
    /// Three events B, A, B where both B events share one word. Queries ask
    /// for the B after A and the B before A.
    Ambiguous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub seed: u64,
    pub num_clips: usize,
    pub clip_duration: f64,
    pub dim: usize,
    pub step_seconds: f64,
    pub events_per_clip: usize,
    /// Standard deviation of the Gaussian noise added to every feature value.
    pub noise_scale: f64,
    /// Seed of the text hashing that event words are planted with.
    pub embed_seed: u64,
    pub layout: SynthLayout,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            num_clips: 20,
            clip_duration: 100.0,
            dim: 256,
            step_seconds: 0.5,
            events_per_clip: 2,
            noise_scale: 0.0,
            embed_seed: 0,
            layout: SynthLayout::Distinct,
        }
    }
}

impl SynthSpec {
    fn validate(&self) -> Result<(), IngestError> {
        let bad = |msg: String| Err(IngestError::Infeasible(msg));
        if self.num_clips == 0 || self.dim == 0 || self.events_per_clip == 0 {
            return bad("num_clips, dim and events_per_clip must be positive".into());
        }
        if !(self.step_seconds.is_finite() && self.step_seconds > 0.0) {
            return bad(format!("step_seconds must be positive, got {}", self.step_seconds));
        }
        if !(self.clip_duration.is_finite() && self.clip_duration >= self.step_seconds) {
            return bad(format!("clip_duration {} shorter than one step", self.clip_duration));
        }
        if !(self.noise_scale.is_finite() && self.noise_scale >= 0.0) {
            return bad(format!("noise_scale must be >= 0, got {}", self.noise_scale));
        }
        if self.layout == SynthLayout::Ambiguous && self.events_per_clip != 3 {
            return bad(format!("ambiguous layout plants 3 events, got events_per_clip={}", self.events_per_clip));
        }
        let slot = self.clip_duration / self.events_per_clip as f64;
        if slot < MIN_EVENT_S + 2.0 * MARGIN_S {
            return bad(format!(
                "{} events of at least {MIN_EVENT_S}s do not fit in {}s",
                self.events_per_clip, self.clip_duration
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub annotations: AnnotationSet,
    pub features: Vec<FeatureMatrix>,
    /// Planted interval of each query's target event.
    pub oracle: BTreeMap<String, TemporalInterval>,
}

impl SynthCorpus {
    pub fn oracle_json(&self) -> String {
        serde_json::to_string_pretty(&self.oracle).expect("oracle serializes")
    }
}

/// Writes `annotations.json`, `oracle.json` and `features/<clip_id>.mlf`.
pub fn save_corpus(corpus: &SynthCorpus, dir: impl AsRef<Path>) -> Result<(), IngestError> {
    let dir = dir.as_ref();
    let features_dir = dir.join("features");
    std::fs::create_dir_all(&features_dir).map_err(|source| IngestError::Io { path: features_dir.clone(), source })?;
    save_annotations(&corpus.annotations, dir.join("annotations.json"))?;
    let oracle_path = dir.join("oracle.json");
    std::fs::write(&oracle_path, corpus.oracle_json() + "\n")
        .map_err(|source| IngestError::Io { path: oracle_path, source })?;
    for fm in &corpus.features {
        save_features(fm, features_dir.join(format!("{}.mlf", fm.clip_id())))?;
    }
    Ok(())
}

fn fill(frame: &str, x: &str, y: &str) -> String {
    frame.replace("{x}", x).replace("{y}", y)
}

/// Buckets of every word the query frames and their mock rewrites use
/// besides the event words, plus the background bucket.
fn reserved_buckets(dim: usize, seed: u64) -> BTreeSet<usize> {
    const X: &str = "qqxplaceholder";
    const Y: &str = "qqyplaceholder";
    let mut texts: Vec<String> = SINGLE_FRAMES
        .iter()
        .chain(PAIR_FRAMES.iter())
        .chain(std::iter::once(&BEFORE_FRAME))
        .map(|f| fill(f, X, Y))
        .collect();
    let rewrites: Vec<String> = texts
        .iter()
        .map(|t| {
            let q = Query::new("q", t.as_str(), None).expect("frame is non-empty");
            mock_complete(&build_prompt(&q, DEFAULT_MODEL, 0.0).expect("valid prompt"))
        })
        .collect();
    texts.extend(rewrites);
    texts.push(BACKGROUND_TOKEN.to_string());
    texts
        .iter()
        .flat_map(|t| tokenize(t).collect::<Vec<_>>())
        .filter(|tok| tok != X && tok != Y)
        .map(|tok| token_slot(&tok, dim, seed).0)
        .collect()
}

fn pseudo_word(rng: &mut ChaCha8Rng) -> String {
    const CONSONANTS: &[u8] = b"bcdfghjklmnprstvz";
    const VOWELS: &[u8] = b"aeiou";
    (0..6)
        .map(|i| {
            let set = if i % 2 == 0 { CONSONANTS } else { VOWELS };
            set[rng.random_range(0..set.len())] as char
        })
        .collect()
}

/// A word whose bucket is neither reserved nor already taken.
fn fresh_word(rng: &mut ChaCha8Rng, dim: usize, seed: u64, taken: &mut BTreeSet<usize>) -> Result<String, IngestError> {
    for _ in 0..10_000 {
        let word = pseudo_word(rng);
        let (bucket, _) = token_slot(&word, dim, seed);
        if taken.insert(bucket) {
            return Ok(word);
        }
    }
    Err(IngestError::Infeasible(format!("dim {dim} leaves no free bucket for another event word")))
}

/// Event step ranges `[start, end)`, one per equal slot of the clip.
fn place_events(rng: &mut ChaCha8Rng, n: usize, num_steps: usize, step: f64) -> Vec<(usize, usize)> {
    let slot = num_steps as f64 / n as f64;
    let margin = (MARGIN_S / step).ceil() as usize;
    let min_len = (MIN_EVENT_S / step).ceil() as usize;
    (0..n)
        .map(|e| {
            let lo = (e as f64 * slot).ceil() as usize + margin;
            let hi = ((e + 1) as f64 * slot).floor() as usize - margin;
            let max_len = ((MAX_EVENT_S / step).floor() as usize).min(hi - lo).max(min_len);
            let len = rng.random_range(min_len..=max_len);
            let start = rng.random_range(lo..=hi - len);
            (start, start + len)
        })
        .collect()
}

struct Planted {
    word: String,
    steps: (usize, usize),
}

/// Generates a corpus. The same spec always yields the same corpus.
pub fn synth_corpus(spec: &SynthSpec) -> Result<SynthCorpus, IngestError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, spec.noise_scale).expect("validated noise scale");
    let reserved = reserved_buckets(spec.dim, spec.embed_seed);
    let num_steps = (spec.clip_duration / spec.step_seconds).round() as usize;
    let step = spec.step_seconds;
    let interval = |(s, e): (usize, usize)| {
        TemporalInterval::new(s as f64 * step, (e as f64 * step).min(spec.clip_duration)).expect("ordered steps")
    };

    let mut clips = Vec::with_capacity(spec.num_clips);
    let mut features = Vec::with_capacity(spec.num_clips);
    let mut oracle = BTreeMap::new();
    let mut single_counter = 0usize;

    for c in 0..spec.num_clips {
        let clip_id = format!("clip_{c:03}");
        let clip = ClipMeta::new(clip_id.clone(), spec.clip_duration).map_err(|e| (clip_id.clone(), e))?;
        let slots = place_events(&mut rng, spec.events_per_clip, num_steps, step);
        let mut taken = reserved.clone();
        let events: Vec<Planted> = match spec.layout {
            SynthLayout::Distinct => slots
                .into_iter()
                .map(|steps| Ok(Planted { word: fresh_word(&mut rng, spec.dim, spec.embed_seed, &mut taken)?, steps }))
                .collect::<Result<_, IngestError>>()?,
            SynthLayout::Ambiguous => {
                let b = fresh_word(&mut rng, spec.dim, spec.embed_seed, &mut taken)?;
                let a = fresh_word(&mut rng, spec.dim, spec.embed_seed, &mut taken)?;
                vec![
                    Planted { word: b.clone(), steps: slots[0] },
                    Planted { word: a, steps: slots[1] },
                    Planted { word: b, steps: slots[2] },
                ]
            }
        };

        let (bg_bucket, bg_sign) = token_slot(BACKGROUND_TOKEN, spec.dim, spec.embed_seed);
        let mut values = Array2::<f32>::zeros((num_steps, spec.dim));
        for t in 0..num_steps {
            match events.iter().find(|ev| (ev.steps.0..ev.steps.1).contains(&t)) {
                Some(ev) => {
                    let (bucket, sign) = token_slot(&ev.word, spec.dim, spec.embed_seed);
                    values[[t, bucket]] = sign as f32;
                }
                None => values[[t, bg_bucket]] = bg_sign as f32,
            }
        }
        if spec.noise_scale > 0.0 {
            values.iter_mut().for_each(|v| *v += noise.sample(&mut rng) as f32);
        }
        features.push(FeatureMatrix::new(clip_id.clone(), step as f32, values)?);

        let mut queries: Vec<(String, TemporalInterval)> = Vec::new();
        match spec.layout {
            SynthLayout::Distinct => {
                for ev in &events {
                    let frame = SINGLE_FRAMES[single_counter % SINGLE_FRAMES.len()];
                    single_counter += 1;
                    queries.push((fill(frame, &ev.word, ""), interval(ev.steps)));
                }
                for (p, pair) in events.windows(2).enumerate() {
                    let frame = PAIR_FRAMES[(c + p) % PAIR_FRAMES.len()];
                    queries.push((fill(frame, &pair[0].word, &pair[1].word), interval(pair[1].steps)));
                }
            }
            SynthLayout::Ambiguous => {
                let (b1, a, b2) = (&events[0], &events[1], &events[2]);
                queries.push((fill(SINGLE_FRAMES[0], &a.word, ""), interval(a.steps)));
                queries.push((fill(PAIR_FRAMES[0], &a.word, &b2.word), interval(b2.steps)));
                queries.push((fill(BEFORE_FRAME, &a.word, &b1.word), interval(b1.steps)));
            }
        }

        let mut annotations = Vec::with_capacity(queries.len());
        for (n, (text, gt)) in queries.into_iter().enumerate() {
            let query_id = format!("{clip_id}_q{n}");
            let template = match_template(&text).map(|t| t.as_str().to_string());
            let query = Query::new(query_id.clone(), text, template).map_err(|e| (query_id.clone(), e))?;
            oracle.insert(query_id.clone(), gt);
            annotations.push(Annotation::new(query, gt, &clip).map_err(|e| (query_id, e))?);
        }
        clips.push(ClipAnnotations { clip, annotations });
    }

    Ok(SynthCorpus { annotations: AnnotationSet::new(clips)?, features, oracle })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reformulate::{parse_instructions, Relation, TemplateId};

    #[test]
    fn deterministic_bytes() {
        let spec = SynthSpec { noise_scale: 0.1, ..SynthSpec::default() };
        let a = synth_corpus(&spec).unwrap();
        let b = synth_corpus(&spec).unwrap();
        assert_eq!(a.annotations.to_json(), b.annotations.to_json());
        assert_eq!(a.oracle_json(), b.oracle_json());
        for (x, y) in a.features.iter().zip(&b.features) {
            assert_eq!(x.to_bytes(), y.to_bytes());
        }
        let c = synth_corpus(&SynthSpec { seed: 1, ..spec }).unwrap();
        assert_ne!(a.annotations.to_json(), c.annotations.to_json());
    }

    #[test]
    fn two_events_give_three_queries_per_clip() {
        let corpus = synth_corpus(&SynthSpec { num_clips: 3, ..SynthSpec::default() }).unwrap();
        for clip in corpus.annotations.clips() {
            assert_eq!(clip.annotations.len(), 3);
        }
        assert_eq!(corpus.oracle.len(), 9);
        assert_eq!(corpus.features.len(), 3);
        assert_eq!(corpus.features[0].num_steps(), 200);
    }

    #[test]
    fn events_are_disjoint_and_sized() {
        let corpus = synth_corpus(&SynthSpec { events_per_clip: 4, num_clips: 5, ..SynthSpec::default() }).unwrap();
        for clip in corpus.annotations.clips() {
            let singles: Vec<_> = clip.annotations.iter().take(4).map(|a| a.ground_truth).collect();
            for w in singles.windows(2) {
                assert!(w[0].end() < w[1].start());
            }
            for gt in &singles {
                assert!(gt.length() >= MIN_EVENT_S && gt.length() <= MAX_EVENT_S);
            }
            assert_eq!(clip.annotations.len(), 4 + 3);
        }
    }

    #[test]
    fn pair_queries_rewrite_to_after_steps() {
        let corpus = synth_corpus(&SynthSpec { num_clips: 2, ..SynthSpec::default() }).unwrap();
        for (_, ann) in corpus.annotations.iter().filter(|(_, a)| a.query.query_id.ends_with("_q2")) {
            let q = &ann.query;
            let seq = parse_instructions(&mock_complete(&build_prompt(q, DEFAULT_MODEL, 0.0).unwrap())).unwrap();
            assert_eq!(seq.len(), 2, "{}", q.text);
            assert_eq!(seq.steps()[1].relation, Relation::After);
        }
    }

    #[test]
    fn ambiguous_layout_shares_a_word() {
        let spec =
            SynthSpec { layout: SynthLayout::Ambiguous, events_per_clip: 3, num_clips: 2, ..SynthSpec::default() };
        let corpus = synth_corpus(&spec).unwrap();
        let clip = &corpus.annotations.clips()[0];
        assert_eq!(clip.annotations.len(), 3);
        let after = &clip.annotations[1];
        let before = &clip.annotations[2];
        assert_eq!(match_template(&after.query.text), Some(TemplateId::ObjWhereBeforeAfter));
        assert!(before.query.text.contains(" before "));
        assert!(before.ground_truth.end() < clip.annotations[0].ground_truth.start());
        assert!(after.ground_truth.start() > clip.annotations[0].ground_truth.end());
        let fm = &corpus.features[0];
        let step = |t: &TemporalInterval| (t.start() / fm.step_seconds()) as usize + 1;
        assert_eq!(fm.row(step(&before.ground_truth)), fm.row(step(&after.ground_truth)));
    }

    #[test]
    fn infeasible_specs() {
        let crowded = SynthSpec { events_per_clip: 7, ..SynthSpec::default() };
        assert!(matches!(synth_corpus(&crowded), Err(IngestError::Infeasible(_))));
        let ambiguous = SynthSpec { layout: SynthLayout::Ambiguous, ..SynthSpec::default() };
        assert!(matches!(synth_corpus(&ambiguous), Err(IngestError::Infeasible(_))));
        let negative = SynthSpec { noise_scale: -1.0, ..SynthSpec::default() };
        assert!(synth_corpus(&negative).is_err());
        let tiny = SynthSpec { dim: 8, ..SynthSpec::default() };
        assert!(matches!(synth_corpus(&tiny), Err(IngestError::Infeasible(_))));
    }

    #[test]
    fn saves_three_artifacts() {
        let corpus = synth_corpus(&SynthSpec { num_clips: 2, ..SynthSpec::default() }).unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_corpus(&corpus, dir.path()).unwrap();
        let back = super::super::load_annotations(dir.path().join("annotations.json")).unwrap();
        assert_eq!(back.query_count(), 6);
        let fm = super::super::load_features(dir.path().join("features/clip_001.mlf")).unwrap();
        assert_eq!(fm, corpus.features[1]);
        let oracle: BTreeMap<String, TemporalInterval> =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("oracle.json")).unwrap()).unwrap();
        assert_eq!(oracle, corpus.oracle);
    }
}
