//! Content-addressed trajectory cache.
//!
//! Trajectory construction is the expensive stage and is reused across every
//! question over the same video, so sets are cached under a key derived from
//! the video content hash and the extraction-config fingerprint. Entry files
//! are the source of truth and are written atomically (temp file + rename),
//! so concurrent extract runs never corrupt them; `index.json` is a
//! convenience listing rebuilt on every store.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::TrajectorySet;
use crate::util::sha256_hex;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IndexEntry {
    pub video_id: String,
    pub extraction_fingerprint: String,
}

#[derive(Debug, Clone)]
pub struct TrajectoryCache {
    dir: PathBuf,
}

impl TrajectoryCache {
    pub fn open(dir: impl Into<PathBuf>) -> Result<TrajectoryCache> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(TrajectoryCache { dir })
    }

    pub fn key(video_content_key: &str, extraction_fingerprint: &str) -> String {
        sha256_hex(format!("{video_content_key}|{extraction_fingerprint}").as_bytes())[..32]
            .to_string()
    }

    fn entry_path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entry_path(key).exists()
    }

    pub fn load(&self, key: &str) -> Result<Option<TrajectorySet>> {
        let path = self.entry_path(key);
        if !path.exists() {
            return Ok(None);
        }
        let text = fs::read_to_string(path)?;
        Ok(Some(serde_json::from_str(&text)?))
    }

    pub fn store(
        &self,
        key: &str,
        set: &TrajectorySet,
        extraction_fingerprint: &str,
    ) -> Result<()> {
        let json = serde_json::to_string(set)?;
        let final_path = self.entry_path(key);
        let tmp_path = self
            .dir
            .join(format!(".tmp-{key}-{}", std::process::id()));
        fs::write(&tmp_path, json)?;
        fs::rename(&tmp_path, &final_path)?;
        self.update_index(key, set, extraction_fingerprint)?;
        Ok(())
    }

    fn update_index(
        &self,
        key: &str,
        set: &TrajectorySet,
        extraction_fingerprint: &str,
    ) -> Result<()> {
        let index_path = self.dir.join("index.json");
        let mut index: BTreeMap<String, IndexEntry> = if index_path.exists() {
            serde_json::from_str(&fs::read_to_string(&index_path)?).unwrap_or_default()
        } else {
            BTreeMap::new()
        };
        index.insert(
            key.to_string(),
            IndexEntry {
                video_id: set.video_id.clone(),
                extraction_fingerprint: extraction_fingerprint.to_string(),
            },
        );
        let tmp_path = self
            .dir
            .join(format!(".tmp-index-{}", std::process::id()));
        fs::write(&tmp_path, serde_json::to_string_pretty(&index)?)?;
        fs::rename(&tmp_path, index_path)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ObjectId, StateAtom, Timestamp, Trajectory};

    fn sample_set() -> TrajectorySet {
        let mut set = TrajectorySet::new("v1", "fp16");
        let id = ObjectId::new("walker").unwrap();
        let mut t = Trajectory::new(id.clone(), (0, id));
        t.merge_record(
            Timestamp::from_millis(1500),
            [StateAtom::unary("walking").unwrap()],
        );
        set.insert(t).unwrap();
        set
    }

    #[test]
    fn store_then_load_is_identity() {
        let dir = tempfile::tempdir().unwrap();
        let cache = TrajectoryCache::open(dir.path()).unwrap();
        let set = sample_set();
        let key = TrajectoryCache::key("content", "fp16");
        assert!(cache.load(&key).unwrap().is_none());
        cache.store(&key, &set, "fp16").unwrap();
        assert!(cache.contains(&key));
        let loaded = cache.load(&key).unwrap().unwrap();
        assert_eq!(loaded, set);
        // Byte-identical round trip.
        assert_eq!(
            serde_json::to_string(&loaded).unwrap(),
            serde_json::to_string(&set).unwrap()
        );
    }

    #[test]
    fn different_fingerprints_use_different_keys() {
        let a = TrajectoryCache::key("content", "fp-a");
        let b = TrajectoryCache::key("content", "fp-b");
        assert_ne!(a, b);
    }
}
