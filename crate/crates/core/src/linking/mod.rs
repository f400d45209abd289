//! Temporal aggregation: links per-chunk observations into globally
//! consistent trajectories.
//!
//! Four steps: score observation pairs by attribute/spatial similarity,
//! filter candidates by temporal gap and confidence threshold, resolve
//! conflicts one-to-one (maximum-weight bipartite matching, or greedy as a
//! degraded mode), and merge the linked components into trajectories.

mod assignment;
mod summarize;

pub use assignment::{matching_total, max_weight_matching};
pub use summarize::{ScriptedSummarizeBackend, SummarizeBackend};

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::chunking::ChunkObservations;
use crate::error::{Error, Result};
use crate::model::{ObjectId, Observation, ObservationRef, Timestamp, Trajectory, TrajectorySet};

/// Conflict-resolution protocol for ambiguous candidate links.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Resolution {
    /// Exact maximum-weight one-to-one matching per chunk pair.
    #[default]
    Bipartite,
    /// Accept candidates in deterministic order subject to feasibility.
    Greedy,
}

/// Identity-linking hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkConfig {
    /// Maximum temporal gap between linked observations, in seconds.
    pub delta_t_max: f64,
    /// Minimum matching confidence for a candidate link.
    pub tau_conf: f64,
    pub attr_weight: f64,
    pub spatial_weight: f64,
    #[serde(default)]
    pub resolution: Resolution,
}

impl Default for LinkConfig {
    fn default() -> Self {
        LinkConfig {
            delta_t_max: 15.0,
            tau_conf: 0.75,
            attr_weight: 0.7,
            spatial_weight: 0.3,
            resolution: Resolution::Bipartite,
        }
    }
}

impl LinkConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta_t_max > 0.0) {
            return Err(Error::domain("delta_t_max must be positive"));
        }
        if !(0.0..=1.0).contains(&self.tau_conf) {
            return Err(Error::domain("tau_conf must lie in [0,1]"));
        }
        for (name, w) in [
            ("attr_weight", self.attr_weight),
            ("spatial_weight", self.spatial_weight),
        ] {
            if !(0.0..=1.0).contains(&w) {
                return Err(Error::domain(format!("{name} must lie in [0,1]")));
            }
        }
        if (self.attr_weight + self.spatial_weight - 1.0).abs() > 1e-9 {
            return Err(Error::domain("attr_weight + spatial_weight must equal 1"));
        }
        Ok(())
    }
}

/// A filtered cross-chunk link candidate: `a` precedes `b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateLink {
    pub a: ObservationRef,
    pub b: ObservationRef,
    pub score: f64,
    /// Seconds between `a`'s last and `b`'s first observed timestamps.
    pub gap: f64,
}

/// Matching confidence in `[0, 1]`: weighted Jaccard similarity of the
/// attribute sets plus spatial proximity of the box centers. When either box
/// is missing the attribute term carries full weight. Two observations with
/// no attributes at all count as identical on the attribute axis (Jaccard 1),
/// leaving discrimination to the spatial term. Symmetric in its arguments.
pub fn similarity(a: &Observation, b: &Observation, cfg: &LinkConfig) -> f64 {
    let jaccard = if a.attributes.is_empty() && b.attributes.is_empty() {
        1.0
    } else {
        let intersection = a.attributes.intersection(&b.attributes).count() as f64;
        let union = a.attributes.union(&b.attributes).count() as f64;
        intersection / union
    };
    match (a.spatial_hint, b.spatial_hint) {
        (Some(box_a), Some(box_b)) => {
            let (ax, ay) = box_a.center();
            let (bx, by) = box_b.center();
            let dist = ((ax - bx).powi(2) + (ay - by).powi(2)).sqrt();
            let spatial = (1.0 - dist / std::f64::consts::SQRT_2).max(0.0);
            cfg.attr_weight * jaccard + cfg.spatial_weight * spatial
        }
        _ => jaccard,
    }
}

/// Enumerates exactly the cross-chunk pairs that satisfy the temporal
/// proximity constraint (`gap < delta_t_max`) and confidence threshold
/// (`score > tau_conf`), in deterministic order: earlier chunk first, then
/// ascending gap, then descending score, then lexicographic ids.
///
/// Observations without any recorded state carry no usable timestamps and are
/// never candidates; they fall through to singleton trajectories.
pub fn build_candidates(
    chunks: &[ChunkObservations],
    cfg: &LinkConfig,
) -> Result<Vec<CandidateLink>> {
    cfg.validate()?;
    for window in chunks.windows(2) {
        if window[0].chunk_index >= window[1].chunk_index {
            return Err(Error::schema(format!(
                "chunks not sorted by index: {} then {}",
                window[0].chunk_index, window[1].chunk_index
            )));
        }
    }

    let mut candidates = Vec::new();
    for (i, earlier) in chunks.iter().enumerate() {
        for later in &chunks[i + 1..] {
            for a in &earlier.observations {
                let Some(a_last) = a.last_timestamp() else {
                    continue;
                };
                for b in &later.observations {
                    let Some(b_first) = b.first_timestamp() else {
                        continue;
                    };
                    let gap = a_last.gap_seconds(b_first);
                    if gap >= cfg.delta_t_max {
                        continue;
                    }
                    let score = similarity(a, b, cfg);
                    if score <= cfg.tau_conf {
                        continue;
                    }
                    candidates.push(CandidateLink {
                        a: (earlier.chunk_index, a.local_id.clone()),
                        b: (later.chunk_index, b.local_id.clone()),
                        score,
                        gap,
                    });
                }
            }
        }
    }
    candidates.sort_by(|x, y| {
        x.a.0
            .cmp(&y.a.0)
            .then(x.gap.total_cmp(&y.gap))
            .then(y.score.total_cmp(&x.score))
            .then(x.a.1.cmp(&y.a.1))
            .then(x.b.1.cmp(&y.b.1))
            .then(x.b.0.cmp(&y.b.0))
    });
    Ok(candidates)
}

/// Resolves candidates to a one-to-one link set: every observation ends up
/// with at most one predecessor and at most one successor.
///
/// Bipartite mode walks chunk pairs in ascending index distance (temporal
/// adjacency first) and computes an exact maximum-total-score matching per
/// pair over the observations still free on the relevant side. Greedy mode
/// accepts candidates in their deterministic order subject to feasibility.
pub fn resolve(candidates: &[CandidateLink], cfg: &LinkConfig) -> Vec<CandidateLink> {
    match cfg.resolution {
        Resolution::Greedy => resolve_greedy(candidates),
        Resolution::Bipartite => resolve_bipartite(candidates),
    }
}

fn resolve_greedy(candidates: &[CandidateLink]) -> Vec<CandidateLink> {
    let mut successor_used: BTreeSet<&ObservationRef> = BTreeSet::new();
    let mut predecessor_used: BTreeSet<&ObservationRef> = BTreeSet::new();
    let mut accepted = Vec::new();
    for link in candidates {
        if successor_used.contains(&link.a) || predecessor_used.contains(&link.b) {
            continue;
        }
        successor_used.insert(&link.a);
        predecessor_used.insert(&link.b);
        accepted.push(link.clone());
    }
    accepted
}

fn resolve_bipartite(candidates: &[CandidateLink]) -> Vec<CandidateLink> {
    // Chunk pairs in adjacency-first order: index distance, then position.
    let mut pairs: Vec<(usize, usize)> =
        candidates.iter().map(|link| (link.a.0, link.b.0)).collect();
    pairs.sort_by_key(|&(a, b)| (b - a, a, b));
    pairs.dedup();

    let mut successor_used: BTreeSet<ObservationRef> = BTreeSet::new();
    let mut predecessor_used: BTreeSet<ObservationRef> = BTreeSet::new();
    let mut accepted = Vec::new();

    for (chunk_a, chunk_b) in pairs {
        let live: Vec<&CandidateLink> = candidates
            .iter()
            .filter(|link| {
                link.a.0 == chunk_a
                    && link.b.0 == chunk_b
                    && !successor_used.contains(&link.a)
                    && !predecessor_used.contains(&link.b)
            })
            .collect();
        if live.is_empty() {
            continue;
        }

        let rows: Vec<&ObservationRef> = {
            let mut v: Vec<&ObservationRef> = live.iter().map(|l| &l.a).collect();
            v.sort();
            v.dedup();
            v
        };
        let cols: Vec<&ObservationRef> = {
            let mut v: Vec<&ObservationRef> = live.iter().map(|l| &l.b).collect();
            v.sort();
            v.dedup();
            v
        };
        let mut weights = vec![vec![0.0f64; cols.len()]; rows.len()];
        let mut by_cell: BTreeMap<(usize, usize), &CandidateLink> = BTreeMap::new();
        for link in &live {
            let r = rows.binary_search(&&link.a).expect("row present");
            let c = cols.binary_search(&&link.b).expect("col present");
            weights[r][c] = link.score;
            by_cell.insert((r, c), link);
        }

        let matched = max_weight_matching(rows.len(), cols.len(), |r, c| weights[r][c]);
        for (r, c) in matched {
            let link = by_cell[&(r, c)];
            successor_used.insert(link.a.clone());
            predecessor_used.insert(link.b.clone());
            accepted.push(link.clone());
        }
    }
    accepted
}

/// Union-find over observation indices.
struct DisjointSets {
    parent: Vec<usize>,
}

impl DisjointSets {
    fn new(len: usize) -> DisjointSets {
        DisjointSets {
            parent: (0..len).collect(),
        }
    }

    fn find(&mut self, x: usize) -> usize {
        if self.parent[x] != x {
            let root = self.find(self.parent[x]);
            self.parent[x] = root;
        }
        self.parent[x]
    }

    fn union(&mut self, a: usize, b: usize) {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra != rb {
            self.parent[ra] = rb;
        }
    }
}

/// Links observations across chunks and merges each connected component into
/// one trajectory; unmatched observations become singletons.
///
/// The global object id is the local id of the component's earliest
/// observation, suffixed with an ordinal on collision. Pure in its inputs:
/// repeated runs serialize byte-identically.
pub fn aggregate(
    video_id: &str,
    chunks: &[ChunkObservations],
    cfg: &LinkConfig,
    provenance: &str,
) -> Result<TrajectorySet> {
    aggregate_with_links(video_id, chunks, cfg, provenance).map(|(set, _)| set)
}

/// [`aggregate`], also returning the accepted links for inspection.
pub fn aggregate_with_links(
    video_id: &str,
    chunks: &[ChunkObservations],
    cfg: &LinkConfig,
    provenance: &str,
) -> Result<(TrajectorySet, Vec<CandidateLink>)> {
    let candidates = build_candidates(chunks, cfg)?;
    let accepted = resolve(&candidates, cfg);

    let observations: Vec<&Observation> =
        chunks.iter().flat_map(|c| c.observations.iter()).collect();
    let index_of: BTreeMap<ObservationRef, usize> = observations
        .iter()
        .enumerate()
        .map(|(i, obs)| ((obs.chunk_index, obs.local_id.clone()), i))
        .collect();

    let mut sets = DisjointSets::new(observations.len());
    for link in &accepted {
        sets.union(index_of[&link.a], index_of[&link.b]);
    }

    let mut components: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..observations.len() {
        components.entry(sets.find(i)).or_default().push(i);
    }

    // Deterministic component order: by the earliest member observation.
    let sort_key = |i: usize| -> (usize, u64, ObjectId) {
        let obs = observations[i];
        (
            obs.chunk_index,
            obs.first_timestamp().map_or(u64::MAX, Timestamp::millis),
            obs.local_id.clone(),
        )
    };
    let mut ordered: Vec<Vec<usize>> = components
        .into_values()
        .map(|mut members| {
            members.sort_by_key(|&i| sort_key(i));
            members
        })
        .collect();
    ordered.sort_by_key(|members| sort_key(members[0]));

    let mut set = TrajectorySet::new(video_id, provenance);
    let mut used_ids: BTreeSet<ObjectId> = BTreeSet::new();
    for members in ordered {
        let earliest = observations[members[0]];
        let mut object = earliest.local_id.clone();
        let mut ordinal = 2;
        while used_ids.contains(&object) {
            object = earliest.local_id.with_ordinal(ordinal);
            ordinal += 1;
        }
        used_ids.insert(object.clone());

        let mut trajectory =
            Trajectory::new(object, (earliest.chunk_index, earliest.local_id.clone()));
        for &member in &members {
            let obs = observations[member];
            trajectory.add_source((obs.chunk_index, obs.local_id.clone()));
            for (t, states) in &obs.states {
                trajectory.merge_record(*t, states.iter().cloned());
            }
        }
        set.insert(trajectory)?;
    }
    Ok((set, accepted))
}
