//! Flat-file persistence: video listings, JSON-lines corpora, and JSON-lines
//! prediction files, with line-numbered schema errors.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::bench::{BenchItem, ReviewStatus};
use crate::error::{Error, Result};
use crate::eval::PredictionRecord;
use crate::model::Timestamp;
use crate::util::sha256_hex;

/// One video known to the pipeline. No pixel data: just an id, a duration,
/// and an optional externally computed content hash.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoRef {
    pub video_id: String,
    pub duration_seconds: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub content_hash: Option<String>,
}

impl VideoRef {
    pub fn new(video_id: impl Into<String>, duration_seconds: f64) -> VideoRef {
        VideoRef {
            video_id: video_id.into(),
            duration_seconds,
            content_hash: None,
        }
    }

    pub fn duration(&self) -> Result<Timestamp> {
        Timestamp::from_secs_f64(self.duration_seconds)
    }

    /// Cache key component: the declared content hash, or a hash of id and
    /// duration when none was supplied.
    pub fn content_key(&self) -> String {
        match &self.content_hash {
            Some(hash) => hash.clone(),
            None => sha256_hex(format!("{}|{}", self.video_id, self.duration_seconds).as_bytes()),
        }
    }
}

/// Loads a JSON array of [`VideoRef`]s and checks id uniqueness.
pub fn load_videos(path: &Path) -> Result<Vec<VideoRef>> {
    let text = fs::read_to_string(path)?;
    let videos: Vec<VideoRef> = serde_json::from_str(&text)?;
    let mut seen = BTreeSet::new();
    for video in &videos {
        if !seen.insert(&video.video_id) {
            return Err(Error::schema(format!(
                "duplicate video id {:?}",
                video.video_id
            )));
        }
        video.duration()?;
    }
    Ok(videos)
}

/// Reads a JSON-lines file, attributing parse errors to their line number.
/// Blank lines are ignored.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let text = fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (index, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let value: T = serde_json::from_str(line)
            .map_err(|e| Error::schema_at(index + 1, e.to_string()))?;
        out.push(value);
    }
    Ok(out)
}

/// Writes values as one JSON document per line.
pub fn write_jsonl<T: Serialize>(path: &Path, values: &[T]) -> Result<()> {
    let mut buffer = String::new();
    for value in values {
        buffer.push_str(&serde_json::to_string(value)?);
        buffer.push('\n');
    }
    fs::write(path, buffer)?;
    Ok(())
}

/// Appends one value as a JSON line (used by resumable answering).
pub fn append_jsonl<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut file = fs::OpenOptions::new().create(true).append(true).open(path)?;
    let mut line = serde_json::to_string(value)?;
    line.push('\n');
    file.write_all(line.as_bytes())?;
    Ok(())
}

/// Loads a benchmark corpus. With `official` set, discarded items are dropped
/// and pending (unreviewed) items are an error; otherwise everything loads.
/// Duplicate item ids are always an error.
pub fn load_corpus(path: &Path, official: bool) -> Result<Vec<BenchItem>> {
    let items: Vec<BenchItem> = read_jsonl(path)?;
    let mut seen = BTreeSet::new();
    for item in &items {
        if !seen.insert(item.item_id.clone()) {
            return Err(Error::schema(format!(
                "duplicate item id {:?}",
                item.item_id
            )));
        }
    }
    if !official {
        return Ok(items);
    }
    let mut approved = Vec::with_capacity(items.len());
    for item in items {
        match item.review_status {
            ReviewStatus::Approved => approved.push(item),
            ReviewStatus::Discarded => {}
            ReviewStatus::Pending => {
                return Err(Error::schema(format!(
                    "item {:?} is pending review; official runs require approved items",
                    item.item_id
                )));
            }
        }
    }
    Ok(approved)
}

pub fn load_predictions(path: &Path) -> Result<Vec<PredictionRecord>> {
    read_jsonl(path)
}

pub fn save_predictions(path: &Path, predictions: &[PredictionRecord]) -> Result<()> {
    write_jsonl(path, predictions)
}
