//! Pipeline configuration: one JSON document covering every stage, with
//! environment-variable interpolation for credentials and stable content
//! fingerprints for cache keying.

use serde::{Deserialize, Serialize};

use crate::answering::{AnswerConfig, RetrievalConfig};
use crate::chunking::SampleStrategy;
use crate::error::{Error, Result};
use crate::linking::LinkConfig;
use crate::util::sha256_hex;

/// How local observations become the per-video representation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AggregatorKind {
    /// Deterministic identity linking into trajectories.
    #[default]
    IdentityLink,
    /// Free-text summarization of the raw observations (ablation mode).
    LlmSummarize,
}

/// Where a pluggable backend comes from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackendSpec {
    /// Fixture file (extractor: chunk map; answerer: response map;
    /// summarizer: per-video text map).
    Scripted { path: String },
    /// HTTP endpoint. `api_key` may reference the environment as `${VAR}`.
    Remote {
        endpoint: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        model: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        api_key: Option<String>,
    },
    /// Offline trajectory-lookup answerer driven by a template table.
    Lookup { templates: String },
}

impl BackendSpec {
    /// Identity string entering config fingerprints. Credentials are
    /// deliberately excluded.
    pub fn identity(&self) -> String {
        match self {
            BackendSpec::Scripted { path } => format!("scripted:{path}"),
            BackendSpec::Remote {
                endpoint, model, ..
            } => format!("remote:{endpoint}:{}", model.as_deref().unwrap_or("")),
            BackendSpec::Lookup { templates } => format!("lookup:{templates}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct BackendsConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extractor: Option<BackendSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answerer: Option<BackendSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summarizer: Option<BackendSpec>,
}

/// The one configuration document for the whole pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub chunk_seconds: f64,
    pub frames_per_chunk: usize,
    pub sample_strategy: SampleStrategy,
    pub aggregator: AggregatorKind,
    pub link: LinkConfig,
    pub retrieval: RetrievalConfig,
    pub answer: AnswerConfig,
    pub backends: BackendsConfig,
    pub workers: usize,
    pub retries: u32,
    pub backoff_ms: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            chunk_seconds: 15.0,
            frames_per_chunk: 60,
            sample_strategy: SampleStrategy::Uniform,
            aggregator: AggregatorKind::IdentityLink,
            link: LinkConfig::default(),
            retrieval: RetrievalConfig::default(),
            answer: AnswerConfig::default(),
            backends: BackendsConfig::default(),
            workers: 4,
            retries: 2,
            backoff_ms: 100,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.chunk_seconds > 0.0) {
            return Err(Error::domain("chunk_seconds must be positive"));
        }
        if self.frames_per_chunk == 0 {
            return Err(Error::domain("frames_per_chunk must be at least 1"));
        }
        if self.workers == 0 {
            return Err(Error::domain("workers must be at least 1"));
        }
        self.link.validate()?;
        self.retrieval.validate()?;
        self.answer.validate()?;
        Ok(())
    }

    pub fn from_json_str(json: &str) -> Result<PipelineConfig> {
        let cfg: PipelineConfig = serde_json::from_str(json)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json_file(path: &std::path::Path) -> Result<PipelineConfig> {
        let text = std::fs::read_to_string(path)?;
        PipelineConfig::from_json_str(&text)
    }

    /// Fingerprint of everything that shapes trajectory construction: chunking,
    /// sampling, linking, aggregation, and the extractor's identity. Changing
    /// any of these must invalidate cached trajectory sets; answer-stage knobs
    /// must not.
    pub fn extraction_fingerprint(&self) -> String {
        #[derive(Serialize)]
        struct ExtractionView<'a> {
            chunk_seconds: f64,
            frames_per_chunk: usize,
            sample_strategy: &'a SampleStrategy,
            aggregator: &'a AggregatorKind,
            link: &'a LinkConfig,
            extractor: String,
        }
        let view = ExtractionView {
            chunk_seconds: self.chunk_seconds,
            frames_per_chunk: self.frames_per_chunk,
            sample_strategy: &self.sample_strategy,
            aggregator: &self.aggregator,
            link: &self.link,
            extractor: self
                .backends
                .extractor
                .as_ref()
                .map(BackendSpec::identity)
                .unwrap_or_default(),
        };
        let json = serde_json::to_string(&view).expect("view serializes");
        sha256_hex(json.as_bytes())[..16].to_string()
    }

    /// Fingerprint of the full configuration (credentials excluded).
    pub fn fingerprint(&self) -> String {
        let mut scrubbed = self.clone();
        for spec in [
            &mut scrubbed.backends.extractor,
            &mut scrubbed.backends.answerer,
            &mut scrubbed.backends.summarizer,
        ] {
            if let Some(BackendSpec::Remote { api_key, .. }) = spec {
                *api_key = None;
            }
        }
        let json = serde_json::to_string(&scrubbed).expect("config serializes");
        sha256_hex(json.as_bytes())[..16].to_string()
    }
}

/// Replaces `${NAME}` references with environment values; unset names error.
pub fn interpolate_env(text: &str) -> Result<String> {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(start) = rest.find("${") {
        out.push_str(&rest[..start]);
        let tail = &rest[start + 2..];
        let Some(end) = tail.find('}') else {
            return Err(Error::schema(format!(
                "unterminated ${{...}} reference in {text:?}"
            )));
        };
        let name = &tail[..end];
        let value = std::env::var(name).map_err(|_| Error::MissingEnvVar {
            name: name.to_string(),
        })?;
        out.push_str(&value);
        rest = &tail[end + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_base_configuration() {
        let cfg = PipelineConfig::default();
        assert_eq!(cfg.chunk_seconds, 15.0);
        assert_eq!(cfg.frames_per_chunk, 60);
        assert_eq!(cfg.answer.frames_at_answerer, 64);
        assert_eq!(cfg.link.delta_t_max, 15.0);
        assert_eq!(cfg.link.tau_conf, 0.75);
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn empty_document_parses_to_defaults() {
        let cfg = PipelineConfig::from_json_str("{}").unwrap();
        assert_eq!(cfg, PipelineConfig::default());
    }

    #[test]
    fn extraction_fingerprint_ignores_answer_stage() {
        let base = PipelineConfig::default();
        let mut answered = base.clone();
        answered.answer.frames_at_answerer = 8;
        answered.retrieval.top_k = 2;
        assert_eq!(
            base.extraction_fingerprint(),
            answered.extraction_fingerprint()
        );
        assert_ne!(base.fingerprint(), answered.fingerprint());

        let mut rechunked = base.clone();
        rechunked.frames_per_chunk = 30;
        assert_ne!(
            base.extraction_fingerprint(),
            rechunked.extraction_fingerprint()
        );
    }

    #[test]
    fn fingerprint_is_stable_and_secret_free() {
        let mut cfg = PipelineConfig::default();
        cfg.backends.answerer = Some(BackendSpec::Remote {
            endpoint: "http://example/answer".into(),
            model: Some("m1".into()),
            api_key: Some("secret-a".into()),
        });
        let one = cfg.fingerprint();
        if let Some(BackendSpec::Remote { api_key, .. }) = &mut cfg.backends.answerer {
            *api_key = Some("secret-b".into());
        }
        assert_eq!(one, cfg.fingerprint());
    }

    #[test]
    fn env_interpolation() {
        std::env::set_var("TRACKLINE_TEST_KEY", "k123");
        assert_eq!(
            interpolate_env("Bearer ${TRACKLINE_TEST_KEY}").unwrap(),
            "Bearer k123"
        );
        assert!(matches!(
            interpolate_env("${TRACKLINE_MISSING_VAR_XYZ}"),
            Err(Error::MissingEnvVar { .. })
        ));
        assert!(interpolate_env("${unclosed").is_err());
        assert_eq!(interpolate_env("plain").unwrap(), "plain");
    }
}
