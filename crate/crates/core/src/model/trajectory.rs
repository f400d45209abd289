//! Persistent object trajectories and the per-video trajectory set.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::timestamp::Timestamp;
use crate::model::token::{id_key_map, ObjectId};
use crate::model::{StateAtom, StateSet};

/// Which chunk-local observation a trajectory record came from.
pub type ObservationRef = (usize, ObjectId);

/// A persistent object identity with its temporally sorted state sequence.
///
/// Records are strictly sorted by timestamp with at most one record per
/// timestamp; states landing on an existing timestamp merge by set union.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TrajectoryRepr", into = "TrajectoryRepr")]
pub struct Trajectory {
    object: ObjectId,
    records: BTreeMap<Timestamp, StateSet>,
    source_observations: Vec<ObservationRef>,
}

#[derive(Serialize, Deserialize)]
struct TrajectoryRepr {
    object: ObjectId,
    records: Vec<(Timestamp, StateSet)>,
    source_observations: Vec<ObservationRef>,
}

impl Trajectory {
    /// A trajectory seeded from one source observation.
    pub fn new(object: ObjectId, source: ObservationRef) -> Trajectory {
        Trajectory {
            object,
            records: BTreeMap::new(),
            source_observations: vec![source],
        }
    }

    pub fn object(&self) -> &ObjectId {
        &self.object
    }

    pub fn records(&self) -> impl Iterator<Item = (Timestamp, &StateSet)> {
        self.records.iter().map(|(t, s)| (*t, s))
    }

    pub fn record_count(&self) -> usize {
        self.records.len()
    }

    pub fn source_observations(&self) -> &[ObservationRef] {
        &self.source_observations
    }

    pub fn first_timestamp(&self) -> Option<Timestamp> {
        self.records.keys().next().copied()
    }

    pub fn last_timestamp(&self) -> Option<Timestamp> {
        self.records.keys().next_back().copied()
    }

    /// The state of the object at time `t`: the states of the latest record at
    /// or before `t` (last observation carried forward), or the empty set if
    /// the object has not been observed yet.
    pub fn state_at(&self, t: Timestamp) -> StateSet {
        self.records
            .range(..=t)
            .next_back()
            .map(|(_, states)| states.clone())
            .unwrap_or_default()
    }

    /// Inserts `states` at `t`, merging by set union with any existing record.
    pub fn merge_record(&mut self, t: Timestamp, states: impl IntoIterator<Item = StateAtom>) {
        self.records.entry(t).or_default().extend(states);
    }

    /// Registers a further source observation; keeps the list sorted and free
    /// of duplicates.
    pub fn add_source(&mut self, source: ObservationRef) {
        if let Err(pos) = self.source_observations.binary_search(&source) {
            self.source_observations.insert(pos, source);
        }
    }

    /// Every distinct predicate token appearing in the records.
    pub fn predicate_tokens(&self) -> BTreeSet<String> {
        self.records
            .values()
            .flatten()
            .map(|atom| atom.predicate().to_string())
            .collect()
    }
}

impl TryFrom<TrajectoryRepr> for Trajectory {
    type Error = Error;

    fn try_from(repr: TrajectoryRepr) -> Result<Trajectory> {
        let mut records = BTreeMap::new();
        let mut last: Option<Timestamp> = None;
        for (t, states) in repr.records {
            if let Some(prev) = last {
                if t <= prev {
                    return Err(Error::schema(format!(
                        "trajectory {:?} records not strictly sorted at {}",
                        repr.object.as_str(),
                        t
                    )));
                }
            }
            last = Some(t);
            records.insert(t, states);
        }
        if repr.source_observations.is_empty() {
            return Err(Error::schema(format!(
                "trajectory {:?} has no source observations",
                repr.object.as_str()
            )));
        }
        let mut sources = repr.source_observations;
        sources.sort();
        let before = sources.len();
        sources.dedup();
        if sources.len() != before {
            return Err(Error::schema(format!(
                "trajectory {:?} lists duplicate source observations",
                repr.object.as_str()
            )));
        }
        Ok(Trajectory {
            object: repr.object,
            records,
            source_observations: sources,
        })
    }
}

impl From<Trajectory> for TrajectoryRepr {
    fn from(traj: Trajectory) -> TrajectoryRepr {
        TrajectoryRepr {
            object: traj.object,
            records: traj.records.into_iter().collect(),
            source_observations: traj.source_observations,
        }
    }
}

/// The global per-video representation: every trajectory plus provenance.
///
/// Source observations partition across trajectories: each (chunk, local id)
/// pair is referenced by exactly one trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TrajectorySetRepr", into = "TrajectorySetRepr")]
pub struct TrajectorySet {
    pub video_id: String,
    trajectories: BTreeMap<ObjectId, Trajectory>,
    /// Extraction-config fingerprint recording how this set was built.
    pub provenance: String,
}

#[derive(Serialize, Deserialize)]
struct TrajectorySetRepr {
    video_id: String,
    #[serde(with = "id_key_map")]
    trajectories: BTreeMap<ObjectId, Trajectory>,
    provenance: String,
}

impl TrajectorySet {
    pub fn new(video_id: impl Into<String>, provenance: impl Into<String>) -> TrajectorySet {
        TrajectorySet {
            video_id: video_id.into(),
            trajectories: BTreeMap::new(),
            provenance: provenance.into(),
        }
    }

    /// Inserts a trajectory under its own object id. Fails on id collision or
    /// if any of its source observations is already claimed.
    pub fn insert(&mut self, trajectory: Trajectory) -> Result<()> {
        if self.trajectories.contains_key(trajectory.object()) {
            return Err(Error::schema(format!(
                "duplicate trajectory object id {:?}",
                trajectory.object().as_str()
            )));
        }
        let claimed: BTreeSet<&ObservationRef> = self
            .trajectories
            .values()
            .flat_map(|t| t.source_observations())
            .collect();
        for source in trajectory.source_observations() {
            if claimed.contains(source) {
                return Err(Error::schema(format!(
                    "source observation (chunk {}, {:?}) referenced by two trajectories",
                    source.0,
                    source.1.as_str()
                )));
            }
        }
        self.trajectories
            .insert(trajectory.object().clone(), trajectory);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    pub fn get(&self, id: &ObjectId) -> Option<&Trajectory> {
        self.trajectories.get(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ObjectId, &Trajectory)> {
        self.trajectories.iter()
    }

    pub fn object_ids(&self) -> impl Iterator<Item = &ObjectId> {
        self.trajectories.keys()
    }

    /// A copy retaining only the trajectories selected by `keep`.
    pub fn subset<F: Fn(&ObjectId) -> bool>(&self, keep: F) -> TrajectorySet {
        TrajectorySet {
            video_id: self.video_id.clone(),
            trajectories: self
                .trajectories
                .iter()
                .filter(|(id, _)| keep(id))
                .map(|(id, t)| (id.clone(), t.clone()))
                .collect(),
            provenance: self.provenance.clone(),
        }
    }
}

impl TryFrom<TrajectorySetRepr> for TrajectorySet {
    type Error = Error;

    fn try_from(repr: TrajectorySetRepr) -> Result<TrajectorySet> {
        let mut set = TrajectorySet::new(repr.video_id, repr.provenance);
        for (key, trajectory) in repr.trajectories {
            if key != *trajectory.object() {
                return Err(Error::schema(format!(
                    "trajectory map key {:?} does not match object id {:?}",
                    key.as_str(),
                    trajectory.object().as_str()
                )));
            }
            set.insert(trajectory)?;
        }
        Ok(set)
    }
}

impl From<TrajectorySet> for TrajectorySetRepr {
    fn from(set: TrajectorySet) -> TrajectorySetRepr {
        TrajectorySetRepr {
            video_id: set.video_id,
            trajectories: set.trajectories,
            provenance: set.provenance,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ts(millis: u64) -> Timestamp {
        Timestamp::from_millis(millis)
    }

    fn traj(id: &str) -> Trajectory {
        Trajectory::new(
            ObjectId::new(id).unwrap(),
            (0, ObjectId::new(id).unwrap()),
        )
    }

    #[test]
    fn state_at_exact_hit() {
        let mut t = traj("walker");
        t.merge_record(ts(2000), [StateAtom::unary("walking").unwrap()]);
        let states = t.state_at(ts(2000));
        assert_eq!(states.len(), 1);
        assert!(states.contains(&StateAtom::unary("walking").unwrap()));
    }

    #[test]
    fn state_at_carries_last_observation_forward() {
        let mut t = traj("walker");
        t.merge_record(ts(2000), [StateAtom::unary("walking").unwrap()]);
        t.merge_record(ts(10_000), [StateAtom::unary("sitting").unwrap()]);
        let states = t.state_at(ts(5000));
        assert!(states.contains(&StateAtom::unary("walking").unwrap()));
        assert_eq!(states.len(), 1);
    }

    #[test]
    fn state_at_before_first_is_empty() {
        let mut t = traj("walker");
        t.merge_record(ts(2000), [StateAtom::unary("walking").unwrap()]);
        assert!(t.state_at(ts(1000)).is_empty());
    }

    #[test]
    fn merge_unions_states_and_keeps_sorted() {
        let mut t = traj("runner");
        t.merge_record(ts(3000), [StateAtom::unary("running").unwrap()]);
        t.merge_record(ts(3000), [StateAtom::unary("ball").unwrap()]);
        t.merge_record(ts(1000), [StateAtom::unary("a").unwrap()]);
        let times: Vec<Timestamp> = t.records().map(|(time, _)| time).collect();
        assert_eq!(times, vec![ts(1000), ts(3000)]);
        assert_eq!(t.state_at(ts(3000)).len(), 2);
    }

    #[test]
    fn partition_invariant_enforced() {
        let mut set = TrajectorySet::new("v1", "test");
        set.insert(traj("a")).unwrap();
        // Same (chunk, local id) claimed by a second trajectory.
        let dup = Trajectory::new(
            ObjectId::new("b").unwrap(),
            (0, ObjectId::new("a").unwrap()),
        );
        assert!(set.insert(dup).is_err());
    }

    #[test]
    fn rejects_unsorted_records_on_parse() {
        let raw = r#"{
            "object": {"id": "a"},
            "records": [[{"seconds": 3.0}, []], [{"seconds": 1.0}, []]],
            "source_observations": [[0, {"id": "a"}]]
        }"#;
        assert!(serde_json::from_str::<TrajectorySet>(raw).is_err());
        assert!(serde_json::from_str::<Trajectory>(raw).is_err());
    }

    #[test]
    fn set_round_trip() {
        let mut set = TrajectorySet::new("v1", "fp");
        let mut a = traj("player_66");
        a.merge_record(ts(2000), [StateAtom::unary("walking").unwrap()]);
        set.insert(a).unwrap();
        let json = serde_json::to_string(&set).unwrap();
        let back: TrajectorySet = serde_json::from_str(&json).unwrap();
        assert_eq!(set, back);
        assert!(json.contains(r#""trajectories":{"player_66""#));
    }
}
