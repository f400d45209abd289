//! Deterministic synthetic worlds for validating the harness end to end.
//!
//! A world is ground truth: per video, a set of objects with fixed visual
//! attributes and a list of timestamped facts, each visible within a small
//! window around its true time. [`FactWorldExtractor`] plays the state
//! extractor faithfully against that ground truth under *any* chunking
//! configuration, so the same world exercises the base pipeline, the
//! shortcut audit, and every ablation row without a model in the loop.
//!
//! [`SyntheticWorld::generate`] builds a seeded multi-video world together
//! with a template-rendered benchmark corpus whose items are all answerable
//! from the full trajectory representation, while a known fraction stops
//! being answerable from a single center frame.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bench::{render_item, BenchItem, Fact, ReasoningChain, ReviewStatus, TemplateTable};
use crate::chunking::{ExtractionRequest, ExtractorBackend, StaticFrameProvider};
use crate::error::{Error, Result};
use crate::model::{ObjectId, Observation, StateAtom, Timestamp};
use crate::storage::VideoRef;

/// Ground truth for one video.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoWorld {
    pub duration_seconds: f64,
    /// Object id → visual attribute tokens (stable across the whole video).
    pub objects: BTreeMap<String, BTreeSet<String>>,
    pub facts: Vec<Fact>,
}

/// Ground truth for a corpus of videos plus the shared visibility window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldSpec {
    /// A fact is observable from a frame within this many seconds of it.
    pub visibility_window_seconds: f64,
    pub videos: BTreeMap<String, VideoWorld>,
}

impl WorldSpec {
    pub fn from_json_str(json: &str) -> Result<WorldSpec> {
        let world: WorldSpec = serde_json::from_str(json)?;
        world.validate()?;
        Ok(world)
    }

    pub fn from_json_file(path: &Path) -> Result<WorldSpec> {
        WorldSpec::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.visibility_window_seconds > 0.0) {
            return Err(Error::domain("visibility window must be positive"));
        }
        for (video_id, video) in &self.videos {
            let duration = Timestamp::from_secs_f64(video.duration_seconds)?;
            for fact in &video.facts {
                if fact.t >= duration {
                    return Err(Error::schema(format!(
                        "fact at {} beyond duration of video {video_id:?}",
                        fact.t
                    )));
                }
                if !video.objects.contains_key(fact.subject.as_str()) {
                    return Err(Error::schema(format!(
                        "fact subject {:?} not declared in video {video_id:?}",
                        fact.subject.as_str()
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn video_refs(&self) -> Vec<VideoRef> {
        self.videos
            .iter()
            .map(|(id, video)| VideoRef::new(id.clone(), video.duration_seconds))
            .collect()
    }

    pub fn frame_provider(&self) -> Result<StaticFrameProvider> {
        let mut entries = Vec::new();
        for (id, video) in &self.videos {
            entries.push((id.clone(), Timestamp::from_secs_f64(video.duration_seconds)?));
        }
        Ok(StaticFrameProvider::from_entries(entries))
    }
}

/// Fact-faithful extractor over a [`WorldSpec`].
///
/// For each chunk it reports exactly those facts that lie inside the chunk
/// interval and have a sampled frame within the visibility window, recorded
/// at their true timestamps on the subject's observation. Works under any
/// chunking/sampling configuration and counts its calls.
pub struct FactWorldExtractor {
    world: WorldSpec,
    calls: AtomicUsize,
}

impl FactWorldExtractor {
    pub fn new(world: WorldSpec) -> FactWorldExtractor {
        FactWorldExtractor {
            world,
            calls: AtomicUsize::new(0),
        }
    }

    pub fn from_json_file(path: &Path) -> Result<FactWorldExtractor> {
        Ok(FactWorldExtractor::new(WorldSpec::from_json_file(path)?))
    }

    pub fn call_count(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    fn window_millis(&self) -> i64 {
        (self.world.visibility_window_seconds * 1000.0).round() as i64
    }
}

impl ExtractorBackend for FactWorldExtractor {
    fn extract(&self, request: &ExtractionRequest) -> Result<Vec<Observation>> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let video = self
            .world
            .videos
            .get(&request.video_id)
            .ok_or_else(|| Error::ExtractorBackend {
                chunk_index: request.chunk.index,
                detail: format!("unknown video {:?}", request.video_id),
            })?;
        let window = self.window_millis();

        let mut by_subject: BTreeMap<&ObjectId, Vec<&Fact>> = BTreeMap::new();
        for fact in &video.facts {
            if !request.chunk.contains(fact.t) {
                continue;
            }
            let visible = request.timestamps.iter().any(|ts| {
                (ts.millis() as i64 - fact.t.millis() as i64).abs() <= window
            });
            if visible {
                by_subject.entry(&fact.subject).or_default().push(fact);
            }
        }

        let mut observations = Vec::new();
        for (subject, facts) in by_subject {
            let attributes = video
                .objects
                .get(subject.as_str())
                .cloned()
                .unwrap_or_default();
            let mut obs =
                Observation::new(subject.clone(), request.chunk.index).with_attributes(attributes);
            for fact in facts {
                obs.record(fact.t, [fact.atom.clone()]);
            }
            observations.push(obs);
        }
        Ok(observations)
    }
}

/// Options for [`SyntheticWorld::generate`].
#[derive(Debug, Clone, Copy)]
pub struct SyntheticOptions {
    pub videos: usize,
    pub seed: u64,
    pub visibility_window_seconds: f64,
}

impl Default for SyntheticOptions {
    fn default() -> Self {
        SyntheticOptions {
            videos: 10,
            seed: 0,
            visibility_window_seconds: 1.0,
        }
    }
}

/// A generated world plus its benchmark corpus and question templates.
pub struct SyntheticWorld {
    pub world: WorldSpec,
    pub items: Vec<BenchItem>,
    pub templates: TemplateTable,
}

const VIDEO_SECONDS: f64 = 45.0;

impl SyntheticWorld {
    /// Builds a seeded corpus of 45-second, three-object videos.
    ///
    /// Every video carries three items: a three-fact chain spread across the
    /// timeline, a two-fact chain placed inside the visibility window of the
    /// video center, and a negated two-fact chain. Anchor states every few
    /// seconds keep each object observable in every chunk, so the full
    /// pipeline links one trajectory per object.
    pub fn generate(options: &SyntheticOptions) -> Result<SyntheticWorld> {
        let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
        let templates = Self::templates();
        let mut videos = BTreeMap::new();
        let mut items = Vec::new();

        for v in 0..options.videos {
            let video_id = format!("synth_{v:02}");
            let jitter = (rng.random_range(0..5) as f64) / 10.0; // 0.0..=0.4
            let colors = ["red", "blue", "green"];
            let names = ["alpha", "beta", "gamma"];
            let ids: Vec<ObjectId> = names
                .iter()
                .map(|n| ObjectId::new(&format!("{n}_{v}")).unwrap())
                .collect();

            let mut objects = BTreeMap::new();
            for (i, id) in ids.iter().enumerate() {
                objects.insert(
                    id.as_str().to_string(),
                    BTreeSet::from([format!("coat_{}", colors[i]), "person".to_string()]),
                );
            }

            let mut facts = Vec::new();
            // Anchor states keep every object linkable chunk to chunk.
            for id in &ids {
                for chunk in 0..3u64 {
                    for offset in [5.0, 10.0] {
                        facts.push(fact_unary(chunk as f64 * 15.0 + offset, id, "on_screen")?);
                    }
                }
            }

            let spread = vec![
                fact_unary(7.0 + jitter, &ids[0], "waves")?,
                fact_relation(21.0 + jitter, &ids[0], "passes_to", &ids[1])?,
                fact_unary(37.0 + jitter, &ids[1], "scores_goal")?,
            ];
            let centered = vec![
                fact_relation(22.0 + jitter, &ids[1], "approaches", &ids[2])?,
                fact_unary(22.8 + jitter, &ids[2], "sits_down")?,
            ];
            let negated = vec![
                fact_unary(9.0 + jitter, &ids[2], "stands_up")?,
                fact_relation(24.0 + jitter, &ids[2], "approaches", &ids[0])?,
            ];
            facts.extend(spread.iter().cloned());
            facts.extend(centered.iter().cloned());
            facts.extend(negated.iter().cloned());

            for (chain_facts, negate) in [(spread, None), (centered, None), (negated, Some(1))] {
                let chain = ReasoningChain { facts: chain_facts };
                let mut item = render_item(&video_id, &chain, &templates, negate)?;
                item.review_status = ReviewStatus::Approved;
                items.push(item);
            }

            videos.insert(
                video_id,
                VideoWorld {
                    duration_seconds: VIDEO_SECONDS,
                    objects,
                    facts,
                },
            );
        }

        let world = WorldSpec {
            visibility_window_seconds: options.visibility_window_seconds,
            videos,
        };
        world.validate()?;
        Ok(SyntheticWorld {
            world,
            items,
            templates,
        })
    }

    pub fn templates() -> TemplateTable {
        let mut table = TemplateTable::new();
        table.insert("waves", "waves at the camera", "wave at the camera");
        table.insert("passes_to", "passes the ball to", "pass the ball to");
        table.insert("scores_goal", "scores a goal", "score a goal");
        table.insert("approaches", "approaches", "approach");
        table.insert("sits_down", "sits down", "sit down");
        table.insert("stands_up", "stands up", "stand up");
        table
    }

    /// Ground-truth rate at which this corpus is solvable from one center
    /// frame: for each item, only facts within the visibility window of the
    /// video midpoint are observable; a clause holds when some observable
    /// fact matches its (subject, predicate, target) triple; the item is
    /// solvable when the resulting conjunction reproduces the gold answer.
    pub fn single_frame_solvable_fraction(&self) -> f64 {
        let window = (self.world.visibility_window_seconds * 1000.0).round() as i64;
        let mut solvable = 0usize;
        for item in &self.items {
            let video = &self.world.videos[&item.video_id];
            let center =
                Timestamp::from_secs_f64(video.duration_seconds).unwrap().millis() / 2;
            let visible: BTreeSet<(&ObjectId, &StateAtom)> = video
                .facts
                .iter()
                .filter(|f| (f.t.millis() as i64 - center as i64).abs() <= window)
                .map(|f| (&f.subject, &f.atom))
                .collect();
            let flipped: BTreeSet<usize> = item
                .sub_questions
                .iter()
                .filter(|s| s.answer == "no")
                .map(|s| s.fact_index)
                .collect();
            let all_satisfied = item.chain.facts.iter().enumerate().all(|(i, fact)| {
                let present = visible.contains(&(&fact.subject, &fact.atom));
                present != flipped.contains(&i)
            });
            let predicted = if all_satisfied { "yes" } else { "no" };
            if predicted == item.target_answer {
                solvable += 1;
            }
        }
        solvable as f64 / self.items.len() as f64
    }

    /// Writes world, corpus, templates, and video listing under `dir`;
    /// returns the file paths in that order.
    pub fn write_files(&self, dir: &Path) -> Result<[std::path::PathBuf; 4]> {
        std::fs::create_dir_all(dir)?;
        let world_path = dir.join("world.json");
        std::fs::write(&world_path, serde_json::to_string_pretty(&self.world)?)?;
        let corpus_path = dir.join("corpus.jsonl");
        crate::storage::write_jsonl(&corpus_path, &self.items)?;
        let templates_path = dir.join("templates.json");
        std::fs::write(&templates_path, serde_json::to_string_pretty(&self.templates)?)?;
        let videos_path = dir.join("videos.json");
        std::fs::write(
            &videos_path,
            serde_json::to_string_pretty(&self.world.video_refs())?,
        )?;
        Ok([world_path, corpus_path, templates_path, videos_path])
    }
}

fn fact_unary(t: f64, subject: &ObjectId, predicate: &str) -> Result<Fact> {
    Ok(Fact {
        t: Timestamp::from_secs_f64(t)?,
        subject: subject.clone(),
        atom: StateAtom::unary(predicate)?,
    })
}

fn fact_relation(t: f64, subject: &ObjectId, predicate: &str, target: &ObjectId) -> Result<Fact> {
    Ok(Fact {
        t: Timestamp::from_secs_f64(t)?,
        subject: subject.clone(),
        atom: StateAtom::relation(predicate, target.clone())?,
    })
}
