//! Frame access abstraction.
//!
//! The pipeline never touches pixels: frames are referenced by
//! `<video_id>@<seconds>` strings that a downstream decoder (or a
//! pre-extracted frame directory) can resolve. Providers only need to know
//! video durations.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::Timestamp;

pub trait FrameProvider: Sync {
    fn duration(&self, video_id: &str) -> Result<Timestamp>;

    /// Stable reference for the frame at `t`.
    fn frame_ref(&self, video_id: &str, t: Timestamp) -> String {
        format!("{video_id}@{}", t.canonical())
    }
}

/// Duration table backed by a video listing; the default reference scheme.
#[derive(Debug, Clone, Default)]
pub struct StaticFrameProvider {
    durations: BTreeMap<String, Timestamp>,
}

impl StaticFrameProvider {
    pub fn new() -> StaticFrameProvider {
        StaticFrameProvider::default()
    }

    pub fn insert(&mut self, video_id: impl Into<String>, duration: Timestamp) {
        self.durations.insert(video_id.into(), duration);
    }

    pub fn from_entries<I>(entries: I) -> StaticFrameProvider
    where
        I: IntoIterator<Item = (String, Timestamp)>,
    {
        StaticFrameProvider {
            durations: entries.into_iter().collect(),
        }
    }
}

impl FrameProvider for StaticFrameProvider {
    fn duration(&self, video_id: &str) -> Result<Timestamp> {
        self.durations
            .get(video_id)
            .copied()
            .ok_or_else(|| Error::schema(format!("unknown video id {video_id:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_refs_use_canonical_timestamps() {
        let mut provider = StaticFrameProvider::new();
        provider.insert("v1", Timestamp::from_millis(60_000));
        assert_eq!(
            provider.frame_ref("v1", Timestamp::from_millis(2500)),
            "v1@2.500"
        );
        assert!(provider.duration("v1").is_ok());
        assert!(provider.duration("v2").is_err());
    }
}
