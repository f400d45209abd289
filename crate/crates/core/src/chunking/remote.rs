//! HTTP-backed state extractor.
//!
//! Sends one structured request per chunk and parses the structured response
//! into observations, normalizing free-text tokens along the way. Responses
//! that do not fit the schema are rejected rather than repaired.

use std::collections::BTreeMap;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BoundingBox, ObjectId, Observation, StateAtom, Timestamp};

use super::{ExtractionRequest, ExtractorBackend};

/// Wire request: one chunk, its sampled timestamps and frame references.
#[derive(Debug, Serialize)]
struct WireRequest<'a> {
    video_id: &'a str,
    chunk_index: usize,
    start: Timestamp,
    end: Timestamp,
    timestamps: &'a [Timestamp],
    frame_refs: &'a [String],
    #[serde(skip_serializing_if = "Option::is_none")]
    model: Option<&'a str>,
}

/// Wire response: raw-text tokens, normalized on ingestion.
#[derive(Debug, Deserialize)]
struct WireResponse {
    observations: Vec<WireObservation>,
}

#[derive(Debug, Deserialize)]
struct WireObservation {
    local_id: String,
    #[serde(default)]
    attributes: Vec<String>,
    #[serde(default)]
    spatial_hint: Option<[f64; 4]>,
    #[serde(default)]
    states: BTreeMap<String, Vec<WireAtom>>,
}

#[derive(Debug, Deserialize)]
struct WireAtom {
    predicate: String,
    #[serde(default)]
    object2: Option<String>,
}

pub struct RemoteExtractorBackend {
    agent: ureq::Agent,
    endpoint: String,
    model: Option<String>,
    api_key: Option<String>,
    serialize_calls: bool,
}

impl RemoteExtractorBackend {
    pub fn new(endpoint: impl Into<String>) -> RemoteExtractorBackend {
        let config = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(120)))
            .build();
        RemoteExtractorBackend {
            agent: config.new_agent(),
            endpoint: endpoint.into(),
            model: None,
            api_key: None,
            serialize_calls: false,
        }
    }

    pub fn with_model(mut self, model: impl Into<String>) -> Self {
        self.model = Some(model.into());
        self
    }

    pub fn with_api_key(mut self, key: impl Into<String>) -> Self {
        self.api_key = Some(key.into());
        self
    }

    /// Declare the endpoint single-flight; the extraction runner will then
    /// keep at most one request in flight.
    pub fn with_single_flight(mut self, value: bool) -> Self {
        self.serialize_calls = value;
        self
    }

    fn parse_observation(&self, chunk: &super::Chunk, wire: WireObservation) -> Result<Observation> {
        let mut obs = Observation::new(ObjectId::new(&wire.local_id)?, chunk.index);
        for attr in wire.attributes {
            obs.attributes.insert(crate::model::normalize_token(&attr)?);
        }
        if let Some([x, y, w, h]) = wire.spatial_hint {
            obs.spatial_hint = Some(BoundingBox::new(x, y, w, h)?);
        }
        for (key, atoms) in wire.states {
            let t = Timestamp::parse(&key)?;
            if !chunk.contains(t) {
                return Err(Error::schema(format!(
                    "response state at {t} outside chunk [{}, {})",
                    chunk.start, chunk.end
                )));
            }
            let mut parsed = Vec::with_capacity(atoms.len());
            for atom in atoms {
                parsed.push(match atom.object2 {
                    Some(target) => StateAtom::relation(&atom.predicate, ObjectId::new(&target)?)?,
                    None => StateAtom::unary(&atom.predicate)?,
                });
            }
            obs.record(t, parsed);
        }
        Ok(obs)
    }
}

impl ExtractorBackend for RemoteExtractorBackend {
    fn extract(&self, request: &ExtractionRequest) -> Result<Vec<Observation>> {
        let body = WireRequest {
            video_id: &request.video_id,
            chunk_index: request.chunk.index,
            start: request.chunk.start,
            end: request.chunk.end,
            timestamps: &request.timestamps,
            frame_refs: &request.frame_refs,
            model: self.model.as_deref(),
        };
        let mut builder = self.agent.post(&self.endpoint);
        if let Some(key) = &self.api_key {
            builder = builder.header("authorization", &format!("Bearer {key}"));
        }
        let mut response = builder.send_json(&body).map_err(|e| Error::ExtractorBackend {
            chunk_index: request.chunk.index,
            detail: e.to_string(),
        })?;
        let wire: WireResponse =
            response
                .body_mut()
                .read_json()
                .map_err(|e| Error::ExtractorBackend {
                    chunk_index: request.chunk.index,
                    detail: format!("unparseable response: {e}"),
                })?;
        wire.observations
            .into_iter()
            .map(|w| self.parse_observation(&request.chunk, w))
            .collect()
    }

    fn single_flight(&self) -> bool {
        self.serialize_calls
    }
}
