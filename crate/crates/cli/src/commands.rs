use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use momentforge::evaluate::{aggregate, compare_report, corpus_stats, MetricSpec, MetricsTable};
use momentforge::ingest::{
    load_annotations, load_features, save_corpus as save_synth, synth_corpus, AnnotationSet, FeatureMatrix,
    SynthLayout, SynthSpec,
};
use momentforge::localize::{
    group_predictions, load_predictions, save_predictions, Localizer, PredictionRecord, TextEmbedder, WindowConfig,
    DEFAULT_NMS_THRESHOLD, DEFAULT_TOP_K,
};
use momentforge::reformulate::{
    self, load_corpus, match_template, save_corpus, ChatClient, CompletionCache, CorpusEntry, HttpChatClient,
    MockClient, Source, API_URL_ENV, DEFAULT_MODEL, DEFAULT_TEMPERATURE,
};

use crate::config::FileConfig;
use crate::error::{write_file, CliError};
use crate::{
    CommonArgs, CompareArgs, EvaluateArgs, LayoutArg, LocalizeArgs, LocalizeMode, ReformulateArgs, StatsArgs, SynthArgs,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClientChoice {
    Mock,
    Live,
    /// Live when the endpoint variable is set, mock otherwise.
    Auto,
}

/// Flags merged over the config file over defaults.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub annotations: Option<PathBuf>,
    pub features_dir: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub client: Result<ClientChoice, String>,
    pub window: (f64, f64, usize),
    pub top_k: usize,
    pub nms: f64,
    pub dim: usize,
    pub seed: u64,
}

impl Resolved {
    pub fn new(flags: &CommonArgs, file: &FileConfig) -> Self {
        let client = if flags.live {
            Ok(ClientChoice::Live)
        } else if flags.mock {
            Ok(ClientChoice::Mock)
        } else {
            match file.client.as_deref() {
                None => Ok(ClientChoice::Auto),
                Some("mock") => Ok(ClientChoice::Mock),
                Some("live") => Ok(ClientChoice::Live),
                Some(other) => Err(format!("config client must be \"mock\" or \"live\", got {other:?}")),
            }
        };
        let defaults = WindowConfig::default();
        Self {
            annotations: flags.annotations.clone().or_else(|| file.annotations.clone()),
            features_dir: flags.features_dir.clone().or_else(|| file.features_dir.clone()),
            cache_dir: flags.cache_dir.clone().or_else(|| file.cache_dir.clone()),
            out: flags.out.clone().or_else(|| file.out.clone()),
            client,
            window: (
                flags.window_s.or(file.window_s).unwrap_or(defaults.window_seconds),
                flags.stride_s.or(file.stride_s).unwrap_or(defaults.stride_seconds),
                flags.segments.or(file.segments).unwrap_or(defaults.segments_per_window),
            ),
            top_k: flags.top_k.or(file.top_k).unwrap_or(DEFAULT_TOP_K),
            nms: flags.nms.or(file.nms).unwrap_or(DEFAULT_NMS_THRESHOLD),
            dim: flags.dim.or(file.dim).unwrap_or(256),
            seed: flags.seed.or(file.seed).unwrap_or(0),
        }
    }

    fn require<'a>(&self, value: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path, CliError> {
        value
            .as_deref()
            .ok_or_else(|| CliError::Input(format!("missing --{flag} (or `{}` in the config)", flag.replace('-', "_"))))
    }

    fn annotations(&self) -> Result<AnnotationSet, CliError> {
        Ok(load_annotations(self.require(&self.annotations, "annotations")?)?)
    }

    fn out(&self) -> Result<&Path, CliError> {
        self.require(&self.out, "out")
    }

    fn localizer(&self) -> Result<Localizer, CliError> {
        let (w, s, k) = self.window;
        let window = WindowConfig::new(w, s, k)?;
        if self.dim == 0 {
            return Err(CliError::Input("--dim must be positive".into()));
        }
        Ok(Localizer::new(window, self.nms, TextEmbedder { dim: self.dim, seed: self.seed })?)
    }
}

fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("output serializes") + "\n"
}

fn ensure_parent(path: &Path) -> Result<(), CliError> {
    match path.parent().filter(|p| !p.as_os_str().is_empty()) {
        Some(parent) => {
            std::fs::create_dir_all(parent).map_err(|e| CliError::Other(format!("{}: {e}", parent.display())))
        }
        None => Ok(()),
    }
}

pub fn synth(cfg: &Resolved, a: &SynthArgs) -> Result<(), CliError> {
    let spec = SynthSpec {
        seed: a.synth_seed,
        num_clips: a.clips,
        clip_duration: a.duration_s,
        dim: cfg.dim,
        step_seconds: a.step_s,
        events_per_clip: a.events,
        noise_scale: a.noise,
        embed_seed: cfg.seed,
        layout: match a.layout {
            LayoutArg::Distinct => SynthLayout::Distinct,
            LayoutArg::Ambiguous => SynthLayout::Ambiguous,
        },
    };
    let corpus = synth_corpus(&spec)?;
    let out = cfg.out()?;
    save_synth(&corpus, out).map_err(|e| CliError::Other(e.to_string()))?;
    println!(
        "wrote {} clips, {} queries to {}",
        corpus.features.len(),
        corpus.annotations.query_count(),
        out.display()
    );
    Ok(())
}

fn make_client(choice: ClientChoice) -> Result<Box<dyn ChatClient>, CliError> {
    let from_env = || HttpChatClient::from_env().map_err(CliError::Input);
    match choice {
        ClientChoice::Mock => Ok(Box::new(MockClient)),
        ClientChoice::Live => match from_env()? {
            Some(client) => Ok(Box::new(client)),
            None => Err(CliError::Input(format!("--live needs {API_URL_ENV} to be set"))),
        },
        ClientChoice::Auto => Ok(match from_env()? {
            Some(client) => Box::new(client),
            None => Box::new(MockClient),
        }),
    }
}

pub fn reformulate(cfg: &Resolved, file: &FileConfig, a: &ReformulateArgs) -> Result<(), CliError> {
    let annotations = cfg.annotations()?;
    let out = cfg.out()?;
    let cache_dir = cfg.require(&cfg.cache_dir, "cache-dir")?;
    let cache = CompletionCache::new(cache_dir)?;
    let client = make_client(cfg.client.clone().map_err(CliError::Input)?)?;
    let model = a.model.clone().or_else(|| file.model.clone()).unwrap_or_else(|| DEFAULT_MODEL.to_string());
    let temperature = a.temperature.or(file.temperature).unwrap_or(DEFAULT_TEMPERATURE);

    let queries: Vec<_> = annotations.iter().map(|(_, ann)| &ann.query).collect();
    let results: Vec<Result<(CorpusEntry, bool), CliError>> = queries
        .par_iter()
        .map(|q| {
            let r = reformulate::reformulate(q, client.as_ref(), &cache, &model, temperature)?;
            Ok(CorpusEntry::from_reformulation(&r)?)
        })
        .collect();
    let mut entries = Vec::with_capacity(results.len());
    let mut parse_fallbacks = 0;
    for r in results {
        let (entry, fallback) = r?;
        parse_fallbacks += usize::from(fallback);
        entries.push(entry);
    }
    ensure_parent(out)?;
    save_corpus(&entries, out)?;

    let mut templates: BTreeMap<&str, usize> = BTreeMap::new();
    for q in &queries {
        *templates.entry(match_template(&q.text).map_or("UNMATCHED", |t| t.as_str())).or_default() += 1;
    }
    let hits = entries.iter().filter(|e| e.source == Source::Cache).count();
    println!("reformulated {} queries into {}", entries.len(), out.display());
    for (template, count) in &templates {
        println!("  {template:<22} {count}");
    }
    let rate = if entries.is_empty() { 0.0 } else { 100.0 * hits as f64 / entries.len() as f64 };
    println!("cache hit rate: {rate:.1}% ({hits}/{})", entries.len());
    if parse_fallbacks > 0 {
        println!("unparsed reformulations kept as one step: {parse_fallbacks}");
    }
    Ok(())
}

fn load_clip_features(dir: &Path, annotations: &AnnotationSet) -> Result<HashMap<String, FeatureMatrix>, CliError> {
    annotations
        .clips()
        .par_iter()
        .map(|c| {
            let id = c.clip.clip_id();
            let path = dir.join(format!("{id}.mlf"));
            if !path.is_file() {
                return Err(CliError::Input(format!("missing feature file for clip {id}: {}", path.display())));
            }
            let fm = load_features(&path)?;
            fm.check_clip(&c.clip)?;
            Ok((id.to_string(), fm))
        })
        .collect()
}

pub fn localize(cfg: &Resolved, a: &LocalizeArgs) -> Result<(), CliError> {
    let annotations = cfg.annotations()?;
    let out = cfg.out()?;
    let localizer = cfg.localizer()?;
    let features = load_clip_features(cfg.require(&cfg.features_dir, "features-dir")?, &annotations)?;
    let corpus: Option<HashMap<String, CorpusEntry>> = match &a.corpus {
        Some(path) => {
            let entries = load_corpus(path)?;
            let map: HashMap<_, _> = entries.into_iter().map(|e| (e.query_id.clone(), e)).collect();
            let mut missing: Vec<&str> = annotations
                .iter()
                .map(|(_, ann)| ann.query.query_id.as_str())
                .filter(|id| !map.contains_key(*id))
                .collect();
            if !missing.is_empty() {
                missing.sort_unstable();
                return Err(CliError::Input(format!("corpus has no entry for queries: {}", missing.join(", "))));
            }
            Some(map)
        }
        None => None,
    };

    let jobs: Vec<_> = annotations.iter().collect();
    let top_k = cfg.top_k;
    let records: Vec<Result<Vec<PredictionRecord>, CliError>> = jobs
        .par_iter()
        .map(|(clip, ann)| {
            let fm = &features[clip.clip_id()];
            let id = &ann.query.query_id;
            let (preds, fallback) = match corpus.as_ref().map(|c| &c[id]) {
                None => {
                    (localizer.localize_single(fm, clip, &localizer.embedder.embed(&ann.query.text), top_k)?, false)
                }
                Some(entry) if a.mode == LocalizeMode::Joined => {
                    let q = localizer.embedder.embed(&entry.steps.joined_description());
                    (localizer.localize_single(fm, clip, &q, top_k)?, false)
                }
                Some(entry) => {
                    let r = localizer.localize_stepwise(fm, clip, &entry.steps, top_k)?;
                    (r.predictions, r.fallback)
                }
            };
            Ok(PredictionRecord::from_ranked(id, &preds, fallback))
        })
        .collect();
    let mut all = Vec::new();
    for r in records {
        all.extend(r?);
    }
    ensure_parent(out)?;
    save_predictions(&all, out)?;
    let fallbacks: std::collections::BTreeSet<_> = all.iter().filter(|r| r.fallback).map(|r| &r.query_id).collect();
    println!("wrote {} predictions for {} queries to {}", all.len(), jobs.len(), out.display());
    if !fallbacks.is_empty() {
        println!("relation constraint fallbacks: {}", fallbacks.len());
    }
    Ok(())
}

pub fn evaluate(cfg: &Resolved, file: &FileConfig, a: &EvaluateArgs) -> Result<(), CliError> {
    let annotations = cfg.annotations()?;
    let spec = MetricSpec::new(
        a.ranks.clone().or_else(|| file.ranks.clone()).unwrap_or_else(|| MetricSpec::default().ranks().to_vec()),
        a.iou
            .clone()
            .or_else(|| file.iou_thresholds.clone())
            .unwrap_or_else(|| MetricSpec::default().iou_thresholds().to_vec()),
    )?;
    let records = load_predictions(&a.predictions)?;
    let grouped = group_predictions(&records)?;
    let table = aggregate(a.label.clone(), &grouped, &annotations, &spec)?;
    if let Some(out) = &cfg.out {
        write_file(out, &(table.to_json() + "\n"))?;
    }
    println!("{} ({} queries)", table.label, table.query_count);
    for c in &table.cells {
        println!("  R@{}, IoU={}: {:.2}", c.n, c.iou, c.recall_pct);
    }
    Ok(())
}

pub fn compare(cfg: &Resolved, a: &CompareArgs) -> Result<(), CliError> {
    let base = MetricsTable::load(&a.base).map_err(|e| CliError::Input(e.to_string()))?;
    let reform = MetricsTable::load(&a.reform).map_err(|e| CliError::Input(e.to_string()))?;
    let (lb, lr) = match &a.labels {
        Some(l) => (l[0].clone(), l[1].clone()),
        None => (base.label.clone(), reform.label.clone()),
    };
    let report = compare_report(&base, &reform, (&lb, &lr))?;
    let text = report.to_text();
    if let Some(out) = &cfg.out {
        write_file(out, &text)?;
        write_file(&out.with_extension("json"), &(report.to_json() + "\n"))?;
    }
    print!("{text}");
    Ok(())
}

pub fn stats(cfg: &Resolved, a: &StatsArgs) -> Result<(), CliError> {
    let entries = load_corpus(&a.corpus)?;
    let stats = corpus_stats(&entries)?;
    if let Some(out) = &cfg.out {
        write_file(out, &to_json(&stats))?;
    }
    println!(
        "original {:.2} → reformulated {:.2} words ({} queries, {:.2} steps on average)",
        stats.mean_words_original, stats.mean_words_reformulated, stats.query_count, stats.mean_steps
    );
    Ok(())
}
