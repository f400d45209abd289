//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A token was empty before or after normalization.
    #[error("token is empty after normalization: {raw:?}")]
    EmptyToken { raw: String },

    /// A timestamp was negative, non-finite, or out of range.
    #[error("invalid timestamp: {detail}")]
    InvalidTimestamp { detail: String },

    /// A numeric argument violated its domain (non-positive duration, weights
    /// that do not sum to one, and so on).
    #[error("domain error: {detail}")]
    Domain { detail: String },

    /// Structured input failed validation. `line` is set when the input came
    /// from a line-oriented file.
    #[error("schema error{}: {detail}", fmt_line(.line))]
    Schema { line: Option<usize>, detail: String },

    /// One or more chunks failed extraction after retries were exhausted.
    #[error("extraction failed for chunks {failed_chunks:?}: {detail}")]
    PartialExtraction {
        failed_chunks: Vec<usize>,
        detail: String,
    },

    /// An extractor backend call failed.
    #[error("extractor backend error (chunk {chunk_index}): {detail}")]
    ExtractorBackend { chunk_index: usize, detail: String },

    /// An answer backend call failed.
    #[error("answer backend error ({question_id}): {detail}")]
    AnswerBackend { question_id: String, detail: String },

    /// Predictions were missing for one or more items.
    #[error("missing predictions for items: {item_ids:?}")]
    MissingPredictions { item_ids: Vec<String> },

    /// A prediction record did not align with its item's sub-questions.
    #[error("prediction for {item_id} has {got} sub answers, item has {expected} sub-questions")]
    PredictionShape {
        item_id: String,
        got: usize,
        expected: usize,
    },

    /// The template table lacks an entry for a predicate.
    #[error("no template for predicate {predicate:?}")]
    MissingTemplate { predicate: String },

    /// Cohen's kappa is undefined because chance agreement is exactly 1.
    #[error("kappa is degenerate: both raters used a single identical category")]
    DegenerateAgreement,

    /// An audit constraint contradicts an explicit setting.
    #[error("configuration conflict: {detail}")]
    ConfigConflict { detail: String },

    /// No cache entry for a video and auto-extraction is disabled.
    #[error("no cached trajectories for video {video_id:?} (run extract first or enable auto-extract)")]
    CacheMiss { video_id: String },

    /// An environment variable referenced from the config is unset.
    #[error("config references unset environment variable {name:?}")]
    MissingEnvVar { name: String },

    #[error("unknown ablation cluster {name:?} (expected A..H)")]
    UnknownCluster { name: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn schema(detail: impl Into<String>) -> Self {
        Error::Schema {
            line: None,
            detail: detail.into(),
        }
    }

    pub fn schema_at(line: usize, detail: impl Into<String>) -> Self {
        Error::Schema {
            line: Some(line),
            detail: detail.into(),
        }
    }

    pub fn domain(detail: impl Into<String>) -> Self {
        Error::Domain {
            detail: detail.into(),
        }
    }

    /// True for failures of a remote or scripted model backend, as opposed to
    /// invalid input. The CLI maps these to a distinct exit code.
    pub fn is_backend(&self) -> bool {
        matches!(
            self,
            Error::ExtractorBackend { .. }
                | Error::AnswerBackend { .. }
                | Error::PartialExtraction { .. }
        )
    }
}

fn fmt_line(line: &Option<usize>) -> String {
    match line {
        Some(n) => format!(" at line {n}"),
        None => String::new(),
    }
}
