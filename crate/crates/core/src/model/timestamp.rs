//! Millisecond-resolution timestamps.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A non-negative point on the video timeline, stored as whole milliseconds.
///
/// Serializes as `{"seconds": <number>}`. Converting through `f64` seconds is
/// lossless at millisecond resolution, which is all the pipeline ever needs:
/// chunk bounds, sampled frame times, and state records are all quantized to
/// milliseconds on construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "TimestampRepr", into = "TimestampRepr")]
pub struct Timestamp(u64);

#[derive(Serialize, Deserialize)]
struct TimestampRepr {
    seconds: f64,
}

impl Timestamp {
    pub const ZERO: Timestamp = Timestamp(0);

    /// Largest value convertible to `f64` seconds without losing milliseconds.
    const MAX_MILLIS: f64 = 9_007_199_254_740_992.0; // 2^53

    pub fn from_millis(millis: u64) -> Timestamp {
        Timestamp(millis)
    }

    pub fn from_secs_f64(seconds: f64) -> Result<Timestamp> {
        if !seconds.is_finite() {
            return Err(Error::InvalidTimestamp {
                detail: format!("not finite: {seconds}"),
            });
        }
        if seconds < 0.0 {
            return Err(Error::InvalidTimestamp {
                detail: format!("negative: {seconds}"),
            });
        }
        let millis = (seconds * 1000.0).round();
        if millis > Self::MAX_MILLIS {
            return Err(Error::InvalidTimestamp {
                detail: format!("too large for millisecond resolution: {seconds}"),
            });
        }
        Ok(Timestamp(millis as u64))
    }

    pub fn millis(self) -> u64 {
        self.0
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / 1000.0
    }

    /// Canonical rendering with exactly three fraction digits, e.g. `2.500`.
    pub fn canonical(self) -> String {
        format!("{}.{:03}", self.0 / 1000, self.0 % 1000)
    }

    /// Parses either the canonical form or any non-negative decimal seconds.
    pub fn parse(text: &str) -> Result<Timestamp> {
        let seconds: f64 = text.trim().parse().map_err(|_| Error::InvalidTimestamp {
            detail: format!("unparseable seconds: {text:?}"),
        })?;
        Timestamp::from_secs_f64(seconds)
    }

    /// Gap to a later timestamp in seconds; zero when `later` precedes `self`.
    pub fn gap_seconds(self, later: Timestamp) -> f64 {
        later.0.saturating_sub(self.0) as f64 / 1000.0
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical())
    }
}

impl TryFrom<TimestampRepr> for Timestamp {
    type Error = Error;

    fn try_from(repr: TimestampRepr) -> Result<Timestamp> {
        Timestamp::from_secs_f64(repr.seconds)
    }
}

impl From<Timestamp> for TimestampRepr {
    fn from(ts: Timestamp) -> TimestampRepr {
        TimestampRepr {
            seconds: ts.as_secs_f64(),
        }
    }
}

/// Serde adapter for maps keyed by [`Timestamp`]. JSON object keys must be
/// strings, so keys use the canonical `s.mmm` rendering.
pub mod ts_key_map {
    use std::collections::BTreeMap;

    use serde::de::Error as DeError;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use super::Timestamp;

    pub fn serialize<V, S>(map: &BTreeMap<Timestamp, V>, serializer: S) -> Result<S::Ok, S::Error>
    where
        V: Serialize,
        S: Serializer,
    {
        serializer.collect_map(map.iter().map(|(k, v)| (k.canonical(), v)))
    }

    pub fn deserialize<'de, V, D>(deserializer: D) -> Result<BTreeMap<Timestamp, V>, D::Error>
    where
        V: Deserialize<'de>,
        D: Deserializer<'de>,
    {
        let raw = BTreeMap::<String, V>::deserialize(deserializer)?;
        let mut out = BTreeMap::new();
        for (key, value) in raw {
            let ts = Timestamp::parse(&key).map_err(D::Error::custom)?;
            if out.insert(ts, value).is_some() {
                return Err(D::Error::custom(format!(
                    "duplicate timestamp key {key:?} after millisecond rounding"
                )));
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_negative_and_non_finite() {
        assert!(Timestamp::from_secs_f64(-0.001).is_err());
        assert!(Timestamp::from_secs_f64(f64::NAN).is_err());
        assert!(Timestamp::from_secs_f64(f64::INFINITY).is_err());
    }

    #[test]
    fn canonical_rendering() {
        assert_eq!(Timestamp::from_millis(2500).canonical(), "2.500");
        assert_eq!(Timestamp::from_millis(0).canonical(), "0.000");
        assert_eq!(Timestamp::from_millis(183_000).canonical(), "183.000");
        assert_eq!(Timestamp::from_millis(7).canonical(), "0.007");
    }

    #[test]
    fn json_round_trip_is_lossless() {
        for millis in [0u64, 1, 999, 1000, 2500, 183_000, 86_400_123] {
            let ts = Timestamp::from_millis(millis);
            let json = serde_json::to_string(&ts).unwrap();
            let back: Timestamp = serde_json::from_str(&json).unwrap();
            assert_eq!(ts, back, "via {json}");
        }
    }

    #[test]
    fn serializes_as_seconds_field() {
        let json = serde_json::to_string(&Timestamp::from_millis(2500)).unwrap();
        assert_eq!(json, r#"{"seconds":2.5}"#);
    }

    #[test]
    fn gap_is_directional() {
        let a = Timestamp::from_millis(1000);
        let b = Timestamp::from_millis(3500);
        assert_eq!(a.gap_seconds(b), 2.5);
        assert_eq!(b.gap_seconds(a), 0.0);
    }
}
