//! Object-centric data model: timestamps, normalized tokens, state atoms,
//! per-chunk observations, and linked trajectories.
//!
//! All types serialize to a canonical JSON form. Collections are ordered
//! (`BTreeMap`/`BTreeSet`) so repeated serialization of equal values is
//! byte-identical.

mod atom;
mod observation;
mod timestamp;
mod token;
mod trajectory;

pub use atom::{AtomKind, StateAtom};
pub use observation::{BoundingBox, Observation};
pub use timestamp::{ts_key_map, Timestamp};
pub use token::{id_key_map, is_normalized, normalize_token, ObjectId};
pub use trajectory::{ObservationRef, Trajectory, TrajectorySet};

/// A set of atoms holding at one timestamp.
pub type StateSet = std::collections::BTreeSet<StateAtom>;
