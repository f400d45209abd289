//! The end-to-end runner composing extraction, aggregation, caching, and
//! answering over a benchmark corpus.
//!
//! Trajectory construction happens once per video (cache-backed) and is then
//! reused for every question on that video; each sub-question is answered as
//! its own independent query.

use std::collections::BTreeMap;

use crate::answering::{answer, answer_with_block, AnswerBackend, Query};
use crate::bench::BenchItem;
use crate::cache::TrajectoryCache;
use crate::chunking::{
    extract_all, plan_chunks, ExtractOptions, ExtractorBackend, FrameProvider, FrameSampleSpec,
};
use crate::config::{AggregatorKind, PipelineConfig};
use crate::error::{Error, Result};
use crate::eval::PredictionRecord;
use crate::linking::{aggregate, SummarizeBackend};
use crate::model::TrajectorySet;
use crate::parallel::bounded_map;
use crate::storage::VideoRef;

/// Everything pluggable the runner needs.
pub struct Backends<'a> {
    pub extractor: &'a dyn ExtractorBackend,
    pub answerer: &'a dyn AnswerBackend,
    pub summarizer: Option<&'a dyn SummarizeBackend>,
    pub frames: &'a dyn FrameProvider,
    pub cache: Option<&'a TrajectoryCache>,
}

/// The per-video representation handed to the answer stage.
pub enum VideoRepresentation {
    Trajectories(TrajectorySet),
    /// Free-text summary standing in for structured trajectories
    /// (summarize-aggregation ablation). Not cached: model-dependent.
    Summary { video_id: String, text: String },
}

/// Outcome of building one video's trajectory set.
pub struct ExtractOutcome {
    pub set: TrajectorySet,
    pub cache_hit: bool,
}

/// Builds (or loads) the trajectory set for one video.
pub fn extract_video(
    cfg: &PipelineConfig,
    backends: &Backends,
    video: &VideoRef,
) -> Result<ExtractOutcome> {
    let fingerprint = cfg.extraction_fingerprint();
    let key = TrajectoryCache::key(&video.content_key(), &fingerprint);
    if let Some(cache) = backends.cache {
        if let Some(set) = cache.load(&key)? {
            return Ok(ExtractOutcome {
                set,
                cache_hit: true,
            });
        }
    }
    let chunks = extract_chunks(cfg, backends, video)?;
    let set = aggregate(&video.video_id, &chunks, &cfg.link, &fingerprint)?;
    if let Some(cache) = backends.cache {
        cache.store(&key, &set, &fingerprint)?;
    }
    Ok(ExtractOutcome {
        set,
        cache_hit: false,
    })
}

fn extract_chunks(
    cfg: &PipelineConfig,
    backends: &Backends,
    video: &VideoRef,
) -> Result<Vec<crate::chunking::ChunkObservations>> {
    let plan = plan_chunks(&video.video_id, video.duration()?, cfg.chunk_seconds)?;
    let spec = FrameSampleSpec {
        frames_per_chunk: cfg.frames_per_chunk,
        strategy: cfg.sample_strategy,
    };
    let options = ExtractOptions {
        workers: cfg.workers,
        retries: cfg.retries,
        backoff: std::time::Duration::from_millis(cfg.backoff_ms),
    };
    extract_all(
        &plan,
        &spec,
        backends.extractor,
        Some(backends.frames),
        &options,
    )
}

/// Builds the representation the answer stage will reason over.
pub fn build_representation(
    cfg: &PipelineConfig,
    backends: &Backends,
    video: &VideoRef,
) -> Result<VideoRepresentation> {
    match cfg.aggregator {
        AggregatorKind::IdentityLink => Ok(VideoRepresentation::Trajectories(
            extract_video(cfg, backends, video)?.set,
        )),
        AggregatorKind::LlmSummarize => {
            let summarizer = backends.summarizer.ok_or_else(|| {
                Error::domain("aggregator is llm_summarize but no summarizer backend configured")
            })?;
            let chunks = extract_chunks(cfg, backends, video)?;
            let text = summarizer.summarize(&video.video_id, &chunks)?;
            Ok(VideoRepresentation::Summary {
                video_id: video.video_id.clone(),
                text,
            })
        }
    }
}

/// The question id of an item's `j`-th sub-question (1-based), used for
/// record/replay fixtures and error reporting.
pub fn sub_question_id(item_id: &str, index: usize) -> String {
    format!("{item_id}#sub{}", index + 1)
}

/// Answers one item's target question and every sub-question, each as an
/// independent query over the same representation.
pub fn answer_item(
    cfg: &PipelineConfig,
    backends: &Backends,
    representation: &VideoRepresentation,
    item: &BenchItem,
) -> Result<PredictionRecord> {
    let ask = |query: &Query| -> Result<String> {
        match representation {
            VideoRepresentation::Trajectories(set) => answer(
                set,
                query,
                &cfg.retrieval,
                &cfg.answer,
                backends.answerer,
                Some(backends.frames),
            ),
            VideoRepresentation::Summary { video_id, text } => answer_with_block(
                video_id,
                text.clone(),
                query,
                &cfg.answer,
                backends.answerer,
                Some(backends.frames),
            ),
        }
    };

    let target_pred = ask(&Query::yes_no(&item.item_id, &item.target_question))?;
    let mut sub_preds = Vec::with_capacity(item.sub_questions.len());
    for (j, sub) in item.sub_questions.iter().enumerate() {
        sub_preds.push(ask(&Query::yes_no(
            sub_question_id(&item.item_id, j),
            &sub.text,
        ))?);
    }
    Ok(PredictionRecord {
        item_id: item.item_id.clone(),
        target_pred,
        sub_preds,
    })
}

/// Outcome of running a corpus: predictions for the items that succeeded,
/// plus `(item_id, error)` pairs for the ones that did not.
pub struct CorpusRunOutcome {
    pub predictions: Vec<PredictionRecord>,
    pub failures: Vec<(String, String)>,
}

/// Runs the full pipeline over a corpus. The representation of each video is
/// built once; questions over it are answered concurrently up to the worker
/// limit. Per-item backend failures are recorded and the run continues.
pub fn run_corpus(
    cfg: &PipelineConfig,
    backends: &Backends,
    videos: &[VideoRef],
    items: &[BenchItem],
) -> Result<CorpusRunOutcome> {
    cfg.validate()?;
    let by_id: BTreeMap<&str, &VideoRef> =
        videos.iter().map(|v| (v.video_id.as_str(), v)).collect();

    // Group item indices by video, keeping first-appearance video order.
    let mut groups: Vec<(&str, Vec<usize>)> = Vec::new();
    for (index, item) in items.iter().enumerate() {
        match groups.iter_mut().find(|(vid, _)| *vid == item.video_id) {
            Some((_, indices)) => indices.push(index),
            None => groups.push((item.video_id.as_str(), vec![index])),
        }
    }

    let mut predictions_by_index: BTreeMap<usize, PredictionRecord> = BTreeMap::new();
    let mut failures: Vec<(String, String)> = Vec::new();

    for (video_id, indices) in groups {
        let Some(video) = by_id.get(video_id) else {
            for &index in &indices {
                failures.push((
                    items[index].item_id.clone(),
                    format!("unknown video id {video_id:?}"),
                ));
            }
            continue;
        };
        let representation = match build_representation(cfg, backends, video) {
            Ok(repr) => repr,
            Err(err) => {
                for &index in &indices {
                    failures.push((items[index].item_id.clone(), err.to_string()));
                }
                continue;
            }
        };
        let outcomes = bounded_map(indices.clone(), cfg.workers, |_, index| {
            (
                index,
                answer_item(cfg, backends, &representation, &items[index]),
            )
        });
        for (index, outcome) in outcomes {
            match outcome {
                Ok(record) => {
                    predictions_by_index.insert(index, record);
                }
                Err(err) => failures.push((items[index].item_id.clone(), err.to_string())),
            }
        }
    }

    Ok(CorpusRunOutcome {
        predictions: predictions_by_index.into_values().collect(),
        failures,
    })
}
