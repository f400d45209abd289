//! Timeline partitioning, frame sampling, and chunk-wise state extraction.
//!
//! A video is split into disjoint half-open chunks, a subset of frame
//! timestamps is sampled per chunk, and a pluggable [`ExtractorBackend`] turns
//! each chunk into local [`Observation`]s. Chunks are independent, so
//! extraction fans out across a bounded worker pool; results are re-ordered by
//! chunk index, making parallel runs indistinguishable from sequential ones.

mod frames;
mod remote;
mod scripted;

pub use frames::{FrameProvider, StaticFrameProvider};
pub use remote::RemoteExtractorBackend;
pub use scripted::ScriptedExtractorBackend;

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Observation, Timestamp};
use crate::parallel::bounded_map;

/// One half-open interval `[start, end)` of the video timeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    pub index: usize,
    pub start: Timestamp,
    pub end: Timestamp,
}

impl Chunk {
    pub fn contains(&self, t: Timestamp) -> bool {
        self.start <= t && t < self.end
    }

    pub fn midpoint(&self) -> Timestamp {
        Timestamp::from_millis((self.start.millis() + self.end.millis()) / 2)
    }
}

/// The chunk partition of one video: pairwise disjoint half-open intervals
/// covering `[0, duration)`. All chunks except possibly the last have length
/// `chunk_seconds`; a trailing remainder stays as a shorter final chunk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChunkPlan {
    pub video_id: String,
    pub duration: Timestamp,
    pub chunk_seconds: f64,
    pub chunks: Vec<Chunk>,
}

/// Splits `[0, duration)` into `ceil(duration / chunk_seconds)` chunks.
pub fn plan_chunks(video_id: &str, duration: Timestamp, chunk_seconds: f64) -> Result<ChunkPlan> {
    if duration == Timestamp::ZERO {
        return Err(Error::domain("duration must be positive"));
    }
    if !(chunk_seconds > 0.0) {
        return Err(Error::domain(format!(
            "chunk_seconds must be positive, got {chunk_seconds}"
        )));
    }
    let chunk_millis = Timestamp::from_secs_f64(chunk_seconds)?.millis();
    if chunk_millis == 0 {
        return Err(Error::domain(
            "chunk_seconds is below millisecond resolution",
        ));
    }
    let total = duration.millis();
    let count = total.div_ceil(chunk_millis) as usize;
    let chunks = (0..count)
        .map(|i| Chunk {
            index: i,
            start: Timestamp::from_millis(i as u64 * chunk_millis),
            end: Timestamp::from_millis(((i as u64 + 1) * chunk_millis).min(total)),
        })
        .collect();
    Ok(ChunkPlan {
        video_id: video_id.to_string(),
        duration,
        chunk_seconds,
        chunks,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SampleStrategy {
    /// Midpoints of `n` equal subintervals.
    #[default]
    Uniform,
    /// The single chunk midpoint; used by the single-frame shortcut audit.
    CenterOnly,
}

/// How many frames to look at per chunk and where to place them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameSampleSpec {
    pub frames_per_chunk: usize,
    #[serde(default)]
    pub strategy: SampleStrategy,
}

impl Default for FrameSampleSpec {
    fn default() -> Self {
        FrameSampleSpec {
            frames_per_chunk: 60,
            strategy: SampleStrategy::Uniform,
        }
    }
}

impl FrameSampleSpec {
    pub fn validate(&self) -> Result<()> {
        if self.frames_per_chunk == 0 {
            return Err(Error::domain("frames_per_chunk must be at least 1"));
        }
        Ok(())
    }
}

/// Sampled frame timestamps for one chunk: sorted, inside `[start, end)`.
/// `Uniform` with `n = 1` coincides with `CenterOnly`.
pub fn sample_timestamps(chunk: &Chunk, spec: &FrameSampleSpec) -> Vec<Timestamp> {
    let start = chunk.start.millis();
    let len = chunk.end.millis() - chunk.start.millis();
    match spec.strategy {
        SampleStrategy::CenterOnly => vec![chunk.midpoint()],
        SampleStrategy::Uniform => {
            let n = spec.frames_per_chunk.max(1) as u64;
            (0..n)
                .map(|i| Timestamp::from_millis(start + (2 * i + 1) * len / (2 * n)))
                .collect()
        }
    }
}

/// The local observations of one chunk; local ids are unique within it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ChunkObservationsRepr", into = "ChunkObservationsRepr")]
pub struct ChunkObservations {
    pub chunk_index: usize,
    pub observations: Vec<Observation>,
}

#[derive(Serialize, Deserialize)]
struct ChunkObservationsRepr {
    chunk_index: usize,
    observations: Vec<Observation>,
}

impl ChunkObservations {
    pub fn new(chunk_index: usize, observations: Vec<Observation>) -> Result<ChunkObservations> {
        let mut seen = std::collections::BTreeSet::new();
        for obs in &observations {
            if obs.chunk_index != chunk_index {
                return Err(Error::schema(format!(
                    "observation {:?} carries chunk_index {} inside chunk {}",
                    obs.local_id.as_str(),
                    obs.chunk_index,
                    chunk_index
                )));
            }
            if !seen.insert(obs.local_id.clone()) {
                return Err(Error::schema(format!(
                    "duplicate local id {:?} in chunk {}",
                    obs.local_id.as_str(),
                    chunk_index
                )));
            }
        }
        Ok(ChunkObservations {
            chunk_index,
            observations,
        })
    }
}

impl TryFrom<ChunkObservationsRepr> for ChunkObservations {
    type Error = Error;

    fn try_from(repr: ChunkObservationsRepr) -> Result<ChunkObservations> {
        ChunkObservations::new(repr.chunk_index, repr.observations)
    }
}

impl From<ChunkObservations> for ChunkObservationsRepr {
    fn from(c: ChunkObservations) -> ChunkObservationsRepr {
        ChunkObservationsRepr {
            chunk_index: c.chunk_index,
            observations: c.observations,
        }
    }
}

/// Everything a backend gets for one chunk call.
#[derive(Debug, Clone)]
pub struct ExtractionRequest {
    pub video_id: String,
    pub chunk: Chunk,
    pub timestamps: Vec<Timestamp>,
    pub frame_refs: Vec<String>,
}

/// A state extractor: maps one sampled chunk to local observations.
///
/// Implementations must either be safe for concurrent invocation or declare
/// `single_flight`, in which case the runner serializes calls.
pub trait ExtractorBackend: Sync {
    fn extract(&self, request: &ExtractionRequest) -> Result<Vec<Observation>>;

    fn single_flight(&self) -> bool {
        false
    }
}

/// Worker/retry knobs for [`extract_all`].
#[derive(Debug, Clone, Copy)]
pub struct ExtractOptions {
    pub workers: usize,
    /// Retries after the first failed attempt.
    pub retries: u32,
    /// Base backoff, doubled after each failed attempt.
    pub backoff: Duration,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        ExtractOptions {
            workers: 4,
            retries: 2,
            backoff: Duration::from_millis(100),
        }
    }
}

/// Runs the backend over every chunk of the plan, in parallel up to the worker
/// limit, and returns observations ordered by chunk index.
///
/// Per-chunk failures are retried with exponential backoff; chunks that still
/// fail are reported together as a partial-extraction error naming their
/// indices. Backend output is validated: wrong chunk indices, out-of-interval
/// timestamps, and duplicate local ids all count as failures.
pub fn extract_all(
    plan: &ChunkPlan,
    spec: &FrameSampleSpec,
    backend: &dyn ExtractorBackend,
    frames: Option<&dyn FrameProvider>,
    options: &ExtractOptions,
) -> Result<Vec<ChunkObservations>> {
    spec.validate()?;
    let workers = if backend.single_flight() {
        1
    } else {
        options.workers
    };

    let requests: Vec<ExtractionRequest> = plan
        .chunks
        .iter()
        .map(|chunk| {
            let timestamps = sample_timestamps(chunk, spec);
            let frame_refs = timestamps
                .iter()
                .map(|t| match frames {
                    Some(provider) => provider.frame_ref(&plan.video_id, *t),
                    None => format!("{}@{}", plan.video_id, t.canonical()),
                })
                .collect();
            ExtractionRequest {
                video_id: plan.video_id.clone(),
                chunk: *chunk,
                timestamps,
                frame_refs,
            }
        })
        .collect();

    let outcomes = bounded_map(requests, workers, |_, request| {
        extract_one(&request, backend, options)
    });

    let mut results = Vec::with_capacity(outcomes.len());
    let mut failures: Vec<(usize, String)> = Vec::new();
    for (chunk, outcome) in plan.chunks.iter().zip(outcomes) {
        match outcome {
            Ok(observations) => results.push(observations),
            Err(err) => failures.push((chunk.index, err.to_string())),
        }
    }
    if !failures.is_empty() {
        let failed_chunks: Vec<usize> = failures.iter().map(|(i, _)| *i).collect();
        let detail = failures
            .iter()
            .map(|(i, msg)| format!("chunk {i}: {msg}"))
            .collect::<Vec<_>>()
            .join("; ");
        return Err(Error::PartialExtraction {
            failed_chunks,
            detail,
        });
    }
    Ok(results)
}

fn extract_one(
    request: &ExtractionRequest,
    backend: &dyn ExtractorBackend,
    options: &ExtractOptions,
) -> Result<ChunkObservations> {
    let attempts = options.retries + 1;
    let mut last_err = None;
    for attempt in 0..attempts {
        if attempt > 0 {
            let backoff = options.backoff * 2u32.saturating_pow(attempt - 1);
            if !backoff.is_zero() {
                std::thread::sleep(backoff);
            }
        }
        match backend
            .extract(request)
            .and_then(|obs| validate_chunk_output(request, obs))
        {
            Ok(result) => return Ok(result),
            Err(err) => last_err = Some(err),
        }
    }
    Err(last_err.expect("at least one attempt"))
}

fn validate_chunk_output(
    request: &ExtractionRequest,
    observations: Vec<Observation>,
) -> Result<ChunkObservations> {
    for obs in &observations {
        for t in obs.states.keys() {
            if !request.chunk.contains(*t) {
                return Err(Error::schema(format!(
                    "observation {:?} records state at {} outside chunk [{}, {})",
                    obs.local_id.as_str(),
                    t,
                    request.chunk.start,
                    request.chunk.end
                )));
            }
        }
    }
    ChunkObservations::new(request.chunk.index, observations)
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;
    use std::sync::atomic::{AtomicUsize, Ordering};

    use super::*;
    use crate::model::ObjectId;

    fn secs(s: f64) -> Timestamp {
        Timestamp::from_secs_f64(s).unwrap()
    }

    #[test]
    fn plan_183_seconds_into_15s_chunks() {
        let plan = plan_chunks("v", secs(183.0), 15.0).unwrap();
        assert_eq!(plan.chunks.len(), 13);
        let last = plan.chunks.last().unwrap();
        assert_eq!(last.start, secs(180.0));
        assert_eq!(last.end, secs(183.0));
    }

    #[test]
    fn plan_exact_and_short_durations() {
        let plan = plan_chunks("v", secs(30.0), 15.0).unwrap();
        assert_eq!(plan.chunks.len(), 2);
        assert_eq!(plan.chunks[0].end, secs(15.0));
        assert_eq!(plan.chunks[1].end, secs(30.0));

        let plan = plan_chunks("v", secs(10.0), 15.0).unwrap();
        assert_eq!(plan.chunks.len(), 1);
        assert_eq!(plan.chunks[0].end, secs(10.0));
    }

    #[test]
    fn plan_rejects_non_positive_inputs() {
        assert!(plan_chunks("v", Timestamp::ZERO, 15.0).is_err());
        assert!(plan_chunks("v", secs(10.0), 0.0).is_err());
        assert!(plan_chunks("v", secs(10.0), -1.0).is_err());
    }

    #[test]
    fn uniform_sampling_hits_subinterval_midpoints() {
        let chunk = Chunk {
            index: 0,
            start: secs(0.0),
            end: secs(15.0),
        };
        let spec = FrameSampleSpec {
            frames_per_chunk: 3,
            strategy: SampleStrategy::Uniform,
        };
        assert_eq!(
            sample_timestamps(&chunk, &spec),
            vec![secs(2.5), secs(7.5), secs(12.5)]
        );
    }

    #[test]
    fn center_only_and_degenerate_uniform_agree() {
        let chunk = Chunk {
            index: 0,
            start: secs(0.0),
            end: secs(15.0),
        };
        let center = FrameSampleSpec {
            frames_per_chunk: 9,
            strategy: SampleStrategy::CenterOnly,
        };
        assert_eq!(sample_timestamps(&chunk, &center), vec![secs(7.5)]);
        let one = FrameSampleSpec {
            frames_per_chunk: 1,
            strategy: SampleStrategy::Uniform,
        };
        assert_eq!(sample_timestamps(&chunk, &one), vec![secs(7.5)]);
    }

    struct FailingBackend {
        fail_chunk: usize,
    }

    impl ExtractorBackend for FailingBackend {
        fn extract(&self, request: &ExtractionRequest) -> Result<Vec<Observation>> {
            if request.chunk.index == self.fail_chunk {
                return Err(Error::ExtractorBackend {
                    chunk_index: request.chunk.index,
                    detail: "synthetic failure".into(),
                });
            }
            Ok(vec![])
        }
    }

    #[test]
    fn failed_chunk_reported_after_retries() {
        let plan = plan_chunks("v", secs(45.0), 15.0).unwrap();
        let options = ExtractOptions {
            workers: 2,
            retries: 2,
            backoff: Duration::ZERO,
        };
        let err = extract_all(
            &plan,
            &FrameSampleSpec::default(),
            &FailingBackend { fail_chunk: 1 },
            None,
            &options,
        )
        .unwrap_err();
        match err {
            Error::PartialExtraction { failed_chunks, .. } => {
                assert_eq!(failed_chunks, vec![1]);
            }
            other => panic!("expected partial extraction, got {other}"),
        }
    }

    struct CountingBackend {
        calls: AtomicUsize,
        emit: BTreeMap<usize, Vec<Observation>>,
    }

    impl ExtractorBackend for CountingBackend {
        fn extract(&self, request: &ExtractionRequest) -> Result<Vec<Observation>> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            Ok(self
                .emit
                .get(&request.chunk.index)
                .cloned()
                .unwrap_or_default())
        }
    }

    fn scripted_emissions(plan: &ChunkPlan) -> BTreeMap<usize, Vec<Observation>> {
        plan.chunks
            .iter()
            .map(|chunk| {
                let mut obs = Observation::new(
                    ObjectId::new(format!("obj_{}", chunk.index).as_str()).unwrap(),
                    chunk.index,
                );
                obs.record(
                    chunk.midpoint(),
                    [crate::model::StateAtom::unary("present").unwrap()],
                );
                (chunk.index, vec![obs])
            })
            .collect()
    }

    #[test]
    fn parallel_matches_sequential() {
        let plan = plan_chunks("v", secs(195.0), 15.0).unwrap();
        assert_eq!(plan.chunks.len(), 13);
        let emit = scripted_emissions(&plan);
        let spec = FrameSampleSpec::default();

        let sequential = extract_all(
            &plan,
            &spec,
            &CountingBackend {
                calls: AtomicUsize::new(0),
                emit: emit.clone(),
            },
            None,
            &ExtractOptions {
                workers: 1,
                ..Default::default()
            },
        )
        .unwrap();

        let backend = CountingBackend {
            calls: AtomicUsize::new(0),
            emit,
        };
        let parallel = extract_all(
            &plan,
            &spec,
            &backend,
            None,
            &ExtractOptions {
                workers: 8,
                ..Default::default()
            },
        )
        .unwrap();

        assert_eq!(sequential, parallel);
        assert_eq!(backend.calls.load(Ordering::SeqCst), 13);
        for (i, chunk) in parallel.iter().enumerate() {
            assert_eq!(chunk.chunk_index, i);
        }
    }

    #[test]
    fn out_of_interval_state_is_rejected() {
        struct BadBackend;
        impl ExtractorBackend for BadBackend {
            fn extract(&self, request: &ExtractionRequest) -> Result<Vec<Observation>> {
                let mut obs = Observation::new(ObjectId::new("x").unwrap(), request.chunk.index);
                obs.record(
                    request.chunk.end,
                    [crate::model::StateAtom::unary("late").unwrap()],
                );
                Ok(vec![obs])
            }
        }
        let plan = plan_chunks("v", secs(30.0), 15.0).unwrap();
        let err = extract_all(
            &plan,
            &FrameSampleSpec::default(),
            &BadBackend,
            None,
            &ExtractOptions {
                retries: 0,
                backoff: Duration::ZERO,
                workers: 1,
            },
        )
        .unwrap_err();
        assert!(matches!(err, Error::PartialExtraction { .. }));
    }
}
