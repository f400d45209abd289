//! Answer backends: the wire contract, a record/replay fixture backend, and
//! an HTTP client.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// What the answer generator sees for one question.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerRequest {
    pub question_id: String,
    pub question_text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub choices: Option<Vec<String>>,
    pub trajectory_block: String,
    pub frame_refs: Vec<String>,
}

/// Produces raw answer text for a request. Safe for concurrent use.
pub trait AnswerBackend: Sync {
    fn answer(&self, request: &AnswerRequest) -> Result<String>;
}

/// Record/replay fixture backend: a JSON map `question_id → raw response`.
pub struct ScriptedAnswerBackend {
    responses: BTreeMap<String, String>,
    calls: AtomicUsize,
}

impl ScriptedAnswerBackend {
    pub fn new(responses: BTreeMap<String, String>) -> ScriptedAnswerBackend {
        ScriptedAnswerBackend {
            responses,
            calls: AtomicUsize::new(0),
        }
    }

    pub fn from_json_str(json: &str) -> Result<ScriptedAnswerBackend> {
        Ok(ScriptedAnswerBackend::new(serde_json::from_str(json)?))
    }

    pub fn from_json_file(path: &Path) -> Result<ScriptedAnswerBackend> {
        let text = std::fs::read_to_string(path)?;
        ScriptedAnswerBackend::from_json_str(&text)
    }

    pub fn call_count(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl AnswerBackend for ScriptedAnswerBackend {
    fn answer(&self, request: &AnswerRequest) -> Result<String> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.responses
            .get(&request.question_id)
            .cloned()
            .ok_or_else(|| Error::AnswerBackend {
                question_id: request.question_id.clone(),
                detail: "no recorded response".to_string(),
            })
    }
}

/// HTTP answer backend: POSTs the request as JSON, reads the response body as
/// the raw answer text.
pub struct RemoteAnswerBackend {
    agent: ureq::Agent,
    endpoint: String,
    api_key: Option<String>,
}

impl RemoteAnswerBackend {
    pub fn new(endpoint: impl Into<String>) -> RemoteAnswerBackend {
        let config = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(120)))
            .build();
        RemoteAnswerBackend {
            agent: config.new_agent(),
            endpoint: endpoint.into(),
            api_key: None,
        }
    }

    pub fn with_api_key(mut self, key: impl Into<String>) -> Self {
        self.api_key = Some(key.into());
        self
    }
}

impl AnswerBackend for RemoteAnswerBackend {
    fn answer(&self, request: &AnswerRequest) -> Result<String> {
        let mut builder = self.agent.post(&self.endpoint);
        if let Some(key) = &self.api_key {
            builder = builder.header("authorization", &format!("Bearer {key}"));
        }
        let mut response = builder
            .send_json(request)
            .map_err(|e| Error::AnswerBackend {
                question_id: request.question_id.clone(),
                detail: e.to_string(),
            })?;
        response
            .body_mut()
            .read_to_string()
            .map_err(|e| Error::AnswerBackend {
                question_id: request.question_id.clone(),
                detail: format!("unreadable response body: {e}"),
            })
    }
}
