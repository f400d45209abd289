//! Local per-chunk observations produced by the state extractor.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::timestamp::{ts_key_map, Timestamp};
use crate::model::token::{is_normalized, ObjectId};
use crate::model::StateSet;

/// A normalized bounding box; every coordinate lies in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BoxRepr", into = "BoxRepr")]
pub struct BoundingBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

#[derive(Serialize, Deserialize)]
struct BoxRepr {
    x: f64,
    y: f64,
    w: f64,
    h: f64,
}

impl BoundingBox {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Result<BoundingBox> {
        for (name, v) in [("x", x), ("y", y), ("w", w), ("h", h)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::domain(format!(
                    "box coordinate {name}={v} outside [0,1]"
                )));
            }
        }
        Ok(BoundingBox { x, y, w, h })
    }

    /// Box center, used for spatial proximity scoring.
    pub fn center(&self) -> (f64, f64) {
        (self.x + self.w / 2.0, self.y + self.h / 2.0)
    }
}

impl TryFrom<BoxRepr> for BoundingBox {
    type Error = Error;

    fn try_from(repr: BoxRepr) -> Result<BoundingBox> {
        BoundingBox::new(repr.x, repr.y, repr.w, repr.h)
    }
}

impl From<BoundingBox> for BoxRepr {
    fn from(b: BoundingBox) -> BoxRepr {
        BoxRepr {
            x: b.x,
            y: b.y,
            w: b.w,
            h: b.h,
        }
    }
}

/// One object instance detected inside one chunk, with its per-timestamp
/// states and the visual descriptors used for cross-chunk identity linking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ObservationRepr", into = "ObservationRepr")]
pub struct Observation {
    pub local_id: ObjectId,
    pub chunk_index: usize,
    /// Deduplicated normalized visual descriptors (`red_shirt`, `number_66`).
    pub attributes: BTreeSet<String>,
    pub spatial_hint: Option<BoundingBox>,
    /// States keyed by timestamp; keys must lie inside the chunk's interval,
    /// which is enforced where the chunk plan is known.
    pub states: BTreeMap<Timestamp, StateSet>,
}

#[derive(Serialize, Deserialize)]
struct ObservationRepr {
    local_id: ObjectId,
    chunk_index: usize,
    attributes: BTreeSet<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    spatial_hint: Option<BoundingBox>,
    #[serde(with = "ts_key_map")]
    states: BTreeMap<Timestamp, StateSet>,
}

impl Observation {
    pub fn new(local_id: ObjectId, chunk_index: usize) -> Observation {
        Observation {
            local_id,
            chunk_index,
            attributes: BTreeSet::new(),
            spatial_hint: None,
            states: BTreeMap::new(),
        }
    }

    pub fn with_attributes<I: IntoIterator<Item = String>>(mut self, attrs: I) -> Observation {
        self.attributes.extend(attrs);
        self
    }

    pub fn with_spatial_hint(mut self, hint: BoundingBox) -> Observation {
        self.spatial_hint = Some(hint);
        self
    }

    /// Adds atoms at `t`, merging with any existing state set.
    pub fn record(&mut self, t: Timestamp, atoms: impl IntoIterator<Item = super::StateAtom>) {
        self.states.entry(t).or_default().extend(atoms);
    }

    pub fn first_timestamp(&self) -> Option<Timestamp> {
        self.states.keys().next().copied()
    }

    pub fn last_timestamp(&self) -> Option<Timestamp> {
        self.states.keys().next_back().copied()
    }
}

impl TryFrom<ObservationRepr> for Observation {
    type Error = Error;

    fn try_from(repr: ObservationRepr) -> Result<Observation> {
        for attr in &repr.attributes {
            if !is_normalized(attr) {
                return Err(Error::schema(format!(
                    "attribute {attr:?} is not a normalized token"
                )));
            }
        }
        Ok(Observation {
            local_id: repr.local_id,
            chunk_index: repr.chunk_index,
            attributes: repr.attributes,
            spatial_hint: repr.spatial_hint,
            states: repr.states,
        })
    }
}

impl From<Observation> for ObservationRepr {
    fn from(obs: Observation) -> ObservationRepr {
        ObservationRepr {
            local_id: obs.local_id,
            chunk_index: obs.chunk_index,
            attributes: obs.attributes,
            spatial_hint: obs.spatial_hint,
            states: obs.states,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::StateAtom;

    #[test]
    fn box_coordinates_validated() {
        assert!(BoundingBox::new(0.0, 0.0, 1.0, 1.0).is_ok());
        assert!(BoundingBox::new(-0.1, 0.0, 0.5, 0.5).is_err());
        assert!(BoundingBox::new(0.0, 0.0, 1.5, 0.5).is_err());
    }

    #[test]
    fn observation_round_trip() {
        let mut obs = Observation::new(ObjectId::new("player 66").unwrap(), 2)
            .with_attributes(["red_shirt".to_string(), "number_66".to_string()]);
        obs.record(
            Timestamp::from_millis(31_250),
            [StateAtom::unary("walking").unwrap()],
        );
        let json = serde_json::to_string(&obs).unwrap();
        let back: Observation = serde_json::from_str(&json).unwrap();
        assert_eq!(obs, back);
        assert!(json.contains(r#""states":{"31.250""#));
    }

    #[test]
    fn rejects_unnormalized_attribute() {
        let raw = r#"{"local_id":{"id":"a"},"chunk_index":0,"attributes":["Red Shirt"],"states":{}}"#;
        assert!(serde_json::from_str::<Observation>(raw).is_err());
    }
}
