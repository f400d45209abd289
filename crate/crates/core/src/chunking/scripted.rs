//! Fixture-backed extractor for tests and offline replay.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};

use crate::error::{Error, Result};
use crate::model::Observation;

use super::{ExtractionRequest, ExtractorBackend};

/// Replays observations from a fixtures map `chunk_index → [Observation]`.
///
/// The on-disk form is a JSON object keyed by the decimal chunk index, each
/// value a list of observations in canonical form. Chunks absent from the map
/// yield no observations. Calls are counted so cache-reuse contracts can be
/// asserted.
pub struct ScriptedExtractorBackend {
    observations: BTreeMap<usize, Vec<Observation>>,
    calls: AtomicUsize,
}

impl ScriptedExtractorBackend {
    pub fn new(observations: BTreeMap<usize, Vec<Observation>>) -> ScriptedExtractorBackend {
        ScriptedExtractorBackend {
            observations,
            calls: AtomicUsize::new(0),
        }
    }

    pub fn from_json_str(json: &str) -> Result<ScriptedExtractorBackend> {
        let raw: BTreeMap<String, Vec<Observation>> = serde_json::from_str(json)?;
        let mut observations = BTreeMap::new();
        for (key, list) in raw {
            let index: usize = key.parse().map_err(|_| {
                Error::schema(format!("fixture key {key:?} is not a chunk index"))
            })?;
            for obs in &list {
                if obs.chunk_index != index {
                    return Err(Error::schema(format!(
                        "fixture chunk {index} lists observation {:?} with chunk_index {}",
                        obs.local_id.as_str(),
                        obs.chunk_index
                    )));
                }
            }
            observations.insert(index, list);
        }
        Ok(ScriptedExtractorBackend::new(observations))
    }

    pub fn from_json_file(path: &Path) -> Result<ScriptedExtractorBackend> {
        let text = std::fs::read_to_string(path)?;
        ScriptedExtractorBackend::from_json_str(&text)
    }

    pub fn call_count(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl ExtractorBackend for ScriptedExtractorBackend {
    fn extract(&self, request: &ExtractionRequest) -> Result<Vec<Observation>> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        Ok(self
            .observations
            .get(&request.chunk.index)
            .cloned()
            .unwrap_or_default())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chunking::{extract_all, plan_chunks, ExtractOptions, FrameSampleSpec};
    use crate::model::Timestamp;

    const FIXTURE: &str = r#"{
        "0": [{
            "local_id": {"id": "player_66"},
            "chunk_index": 0,
            "attributes": ["red_shirt"],
            "states": {"7.500": [{"kind": "unary", "predicate": "walking"}]}
        }],
        "1": []
    }"#;

    #[test]
    fn replays_fixture_and_counts_calls() {
        let backend = ScriptedExtractorBackend::from_json_str(FIXTURE).unwrap();
        let plan = plan_chunks("v", Timestamp::from_secs_f64(30.0).unwrap(), 15.0).unwrap();
        let out = extract_all(
            &plan,
            &FrameSampleSpec::default(),
            &backend,
            None,
            &ExtractOptions::default(),
        )
        .unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].observations.len(), 1);
        assert!(out[1].observations.is_empty());
        assert_eq!(backend.call_count(), 2);
    }

    #[test]
    fn rejects_mismatched_chunk_index() {
        let bad = r#"{"2": [{
            "local_id": {"id": "x"}, "chunk_index": 0,
            "attributes": [], "states": {}
        }]}"#;
        assert!(ScriptedExtractorBackend::from_json_str(bad).is_err());
    }
}
