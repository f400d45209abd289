//! Shortcut and budget audits: re-run the pipeline under a constrained
//! configuration and score the same corpus.

use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::model::Timestamp;
use crate::pipeline::{run_corpus, Backends};
use crate::storage::VideoRef;
use crate::util::sha256_hex;

use super::{compute_report, MetricReport};
use crate::answering::Modality;
use crate::bench::BenchItem;
use crate::chunking::SampleStrategy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuditMode {
    /// One global chunk, one center frame, one frame at the answerer.
    SingleFrame,
    /// Cap the extractor-plus-answerer frame total at the frame budget.
    EqualFrames,
    /// Collapse extraction to a single backend call per video.
    EqualCalls,
    /// Truncate the rendered trajectory block to the token budget.
    EqualTokens,
}

impl std::str::FromStr for AuditMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<AuditMode> {
        match s {
            "single_frame" => Ok(AuditMode::SingleFrame),
            "equal_frames" => Ok(AuditMode::EqualFrames),
            "equal_calls" => Ok(AuditMode::EqualCalls),
            "equal_tokens" => Ok(AuditMode::EqualTokens),
            other => Err(Error::domain(format!(
                "unknown audit mode {other:?} (expected single_frame, equal_frames, equal_calls, equal_tokens)"
            ))),
        }
    }
}

impl std::fmt::Display for AuditMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            AuditMode::SingleFrame => "single_frame",
            AuditMode::EqualFrames => "equal_frames",
            AuditMode::EqualCalls => "equal_calls",
            AuditMode::EqualTokens => "equal_tokens",
        };
        f.write_str(name)
    }
}

/// Budgets used by the budget-matched modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditOptions {
    pub frame_budget: usize,
    pub token_budget: usize,
}

impl Default for AuditOptions {
    fn default() -> Self {
        AuditOptions {
            frame_budget: 64,
            token_budget: 512,
        }
    }
}

impl AuditMode {
    /// Derives the constrained configuration for one video. Errors when the
    /// constraint contradicts an explicit setting in `base`.
    pub fn apply(
        self,
        base: &PipelineConfig,
        duration: Timestamp,
        options: &AuditOptions,
    ) -> Result<PipelineConfig> {
        let mut cfg = base.clone();
        match self {
            AuditMode::SingleFrame => {
                if base.answer.modality == Modality::TextOnly {
                    return Err(Error::ConfigConflict {
                        detail: "single_frame audit sends one frame to the answerer, \
                                 but modality is text_only"
                            .into(),
                    });
                }
                cfg.chunk_seconds = duration.as_secs_f64();
                cfg.frames_per_chunk = 1;
                cfg.sample_strategy = SampleStrategy::CenterOnly;
                cfg.answer.frames_at_answerer = 1;
            }
            AuditMode::EqualFrames => {
                let budget = options.frame_budget;
                let chunk_millis = Timestamp::from_secs_f64(base.chunk_seconds)?.millis().max(1);
                let chunk_count = duration.millis().div_ceil(chunk_millis) as usize;
                if chunk_count >= budget {
                    return Err(Error::ConfigConflict {
                        detail: format!(
                            "equal_frames budget {budget} cannot cover {chunk_count} chunks \
                             plus the answerer; raise the budget or enlarge chunk_seconds"
                        ),
                    });
                }
                let answer_frames = if base.answer.modality == Modality::TextOnly {
                    0
                } else {
                    base.answer
                        .frames_at_answerer
                        .min(budget - chunk_count)
                        .max(1)
                };
                cfg.answer.frames_at_answerer = answer_frames;
                cfg.frames_per_chunk = ((budget - answer_frames) / chunk_count).max(1);
            }
            AuditMode::EqualCalls => {
                cfg.chunk_seconds = duration.as_secs_f64();
            }
            AuditMode::EqualTokens => {
                if base.answer.modality == Modality::FramesOnly {
                    return Err(Error::ConfigConflict {
                        detail: "equal_tokens truncates the trajectory block, \
                                 but modality is frames_only so no block is sent"
                            .into(),
                    });
                }
                cfg.answer.token_budget = Some(options.token_budget);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// An audit run's report plus the fingerprint of what was actually applied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditOutcome {
    pub mode: AuditMode,
    pub report: MetricReport,
    pub config_fingerprint: String,
}

/// Runs the constrained pipeline over the corpus and scores it. Every item
/// must produce a prediction; per-item failures abort the audit since a
/// partial audit would silently skew the report.
pub fn run_audit(
    mode: AuditMode,
    base: &PipelineConfig,
    backends: &Backends,
    videos: &[VideoRef],
    items: &[BenchItem],
    options: &AuditOptions,
) -> Result<AuditOutcome> {
    let mut predictions = Vec::with_capacity(items.len());
    for video in videos {
        let scoped: Vec<BenchItem> = items
            .iter()
            .filter(|item| item.video_id == video.video_id)
            .cloned()
            .collect();
        if scoped.is_empty() {
            continue;
        }
        let cfg = mode.apply(base, video.duration()?, options)?;
        let outcome = run_corpus(&cfg, backends, std::slice::from_ref(video), &scoped)?;
        if let Some((item_id, detail)) = outcome.failures.first() {
            return Err(Error::AnswerBackend {
                question_id: item_id.clone(),
                detail: format!("audit aborted: {detail}"),
            });
        }
        predictions.extend(outcome.predictions);
    }
    let report = compute_report(items, &predictions)?;
    let fingerprint = sha256_hex(
        format!(
            "audit:{mode}|{}|frame_budget={}|token_budget={}",
            base.fingerprint(),
            options.frame_budget,
            options.token_budget
        )
        .as_bytes(),
    )[..16]
        .to_string();
    Ok(AuditOutcome {
        mode,
        report,
        config_fingerprint: fingerprint,
    })
}
