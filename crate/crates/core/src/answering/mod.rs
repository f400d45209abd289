//! Query-based trajectory retrieval and trajectory-guided answering.
//!
//! `retrieve` picks the query-relevant trajectory subset, `render_trajectories`
//! turns it into a deterministic text block, and `answer` feeds block, question
//! and a uniformly sampled frame budget to a pluggable backend, normalizing
//! whatever text comes back. Trajectory construction happens upstream and is
//! never re-run here.

mod backend;
mod lookup;

pub use backend::{AnswerBackend, AnswerRequest, RemoteAnswerBackend, ScriptedAnswerBackend};
pub use lookup::TrajectoryLookupBackend;

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::chunking::{sample_timestamps, Chunk, FrameProvider, FrameSampleSpec, SampleStrategy};
use crate::error::{Error, Result};
use crate::model::{normalize_token, ObjectId, Timestamp, Trajectory, TrajectorySet};

/// Expected answer shape of a question.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpectedForm {
    YesNo,
    MultipleChoice,
    FreeText,
}

/// A question posed against one video's trajectory set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Query {
    pub question_id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub choices: Option<Vec<String>>,
    pub expected_form: ExpectedForm,
}

impl Query {
    pub fn yes_no(question_id: impl Into<String>, text: impl Into<String>) -> Query {
        Query {
            question_id: question_id.into(),
            text: text.into(),
            choices: None,
            expected_form: ExpectedForm::YesNo,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match (self.expected_form, &self.choices) {
            (ExpectedForm::MultipleChoice, None) => Err(Error::schema(format!(
                "question {} is multiple choice but lists no choices",
                self.question_id
            ))),
            (ExpectedForm::MultipleChoice, Some(choices)) if choices.is_empty() => Err(
                Error::schema(format!("question {} has empty choices", self.question_id)),
            ),
            (ExpectedForm::MultipleChoice, Some(_)) => Ok(()),
            (_, Some(_)) => Err(Error::schema(format!(
                "question {} lists choices but is not multiple choice",
                self.question_id
            ))),
            (_, None) => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RetrievalMode {
    /// Rank by token overlap with the query, keep the top k.
    #[default]
    Scored,
    /// No filter: the full timeline passes through.
    None,
    /// Uniformly sampled top-k, for the random-filter ablation.
    RandomTopK,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetrievalConfig {
    #[serde(default)]
    pub mode: RetrievalMode,
    pub top_k: usize,
    #[serde(default)]
    pub seed: u64,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        RetrievalConfig {
            mode: RetrievalMode::Scored,
            top_k: 8,
            seed: 0,
        }
    }
}

impl RetrievalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.top_k == 0 {
            return Err(Error::domain("top_k must be at least 1"));
        }
        Ok(())
    }
}

/// What the answer backend gets to see.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Modality {
    #[default]
    TextAndFrames,
    TextOnly,
    FramesOnly,
}

/// Record ordering inside the rendered block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryOrder {
    #[default]
    Sorted,
    Shuffled {
        seed: u64,
    },
}

/// Text form of the rendered block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RenderStyle {
    /// One `t=<seconds>: predicate[ → object2]` line per atom.
    #[default]
    Structured,
    /// Per-object prose sentences.
    Prose,
    /// One global caption stream without per-object structure.
    DenseCaption,
}

/// Answer-stage configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnswerConfig {
    pub frames_at_answerer: usize,
    #[serde(default)]
    pub modality: Modality,
    #[serde(default)]
    pub trajectory_order: TrajectoryOrder,
    #[serde(default)]
    pub render_style: RenderStyle,
    /// Whitespace-token cap applied to the rendered block (budget audits).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token_budget: Option<usize>,
}

impl Default for AnswerConfig {
    fn default() -> Self {
        AnswerConfig {
            frames_at_answerer: 64,
            modality: Modality::TextAndFrames,
            trajectory_order: TrajectoryOrder::Sorted,
            render_style: RenderStyle::Structured,
            token_budget: None,
        }
    }
}

impl AnswerConfig {
    pub fn validate(&self) -> Result<()> {
        match (self.frames_at_answerer, self.modality) {
            (0, Modality::TextOnly) => Ok(()),
            (0, _) => Err(Error::domain(
                "frames_at_answerer = 0 requires text_only modality",
            )),
            (_, Modality::TextOnly) => Err(Error::domain(
                "text_only modality requires frames_at_answerer = 0",
            )),
            _ => Ok(()),
        }
    }
}

/// Word tokens of free text: each whitespace-separated word normalized, then
/// split on underscores. Unnormalizable words (pure punctuation) are dropped.
fn word_tokens(text: &str) -> BTreeSet<String> {
    let mut tokens = BTreeSet::new();
    for word in text.split_whitespace() {
        if let Ok(normalized) = normalize_token(word) {
            for part in normalized.split('_') {
                if !part.is_empty() {
                    tokens.insert(part.to_string());
                }
            }
        }
    }
    tokens
}

/// A trajectory's token pool: its object id plus every predicate token in its
/// records, split into word tokens.
fn trajectory_tokens(id: &ObjectId, trajectory: &Trajectory) -> BTreeSet<String> {
    let mut tokens: BTreeSet<String> = id.as_str().split('_').map(str::to_string).collect();
    for predicate in trajectory.predicate_tokens() {
        for part in predicate.split('_') {
            if !part.is_empty() {
                tokens.insert(part.to_string());
            }
        }
    }
    tokens
}

/// Relevance of a trajectory to a query: the number of shared word tokens.
pub fn relevance_score(query_text: &str, id: &ObjectId, trajectory: &Trajectory) -> usize {
    let query = word_tokens(query_text);
    trajectory_tokens(id, trajectory)
        .intersection(&query)
        .count()
}

/// Selects the query-relevant subset of trajectories. Every mode returns a
/// subset with video id and provenance preserved; `None` mode returns the
/// input unchanged.
pub fn retrieve(set: &TrajectorySet, query: &Query, cfg: &RetrievalConfig) -> Result<TrajectorySet> {
    cfg.validate()?;
    match cfg.mode {
        RetrievalMode::None => Ok(set.clone()),
        RetrievalMode::Scored => {
            let mut scored: Vec<(usize, &ObjectId)> = set
                .iter()
                .map(|(id, traj)| (relevance_score(&query.text, id, traj), id))
                .collect();
            // Rank by score descending, ties by lexicographic id.
            scored.sort_by(|(sa, ida), (sb, idb)| sb.cmp(sa).then(ida.cmp(idb)));
            let keep: BTreeSet<ObjectId> = scored
                .into_iter()
                .take(cfg.top_k)
                .map(|(_, id)| id.clone())
                .collect();
            Ok(set.subset(|id| keep.contains(id)))
        }
        RetrievalMode::RandomTopK => {
            let mut ids: Vec<ObjectId> = set.object_ids().cloned().collect();
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            ids.shuffle(&mut rng);
            let keep: BTreeSet<ObjectId> = ids.into_iter().take(cfg.top_k).collect();
            Ok(set.subset(|id| keep.contains(id)))
        }
    }
}

/// Renders the retrieved set into the deterministic text block handed to the
/// answer backend. Structured style:
///
/// ```text
/// trajectories:
/// object: player_66
///   t=2.000: wearing_red_shirt
///   t=2.000: passes_to → player_27
/// ```
///
/// Sorted order lists records in ascending time; shuffled order permutes each
/// trajectory's lines reproducibly from the seed.
pub fn render_trajectories(set: &TrajectorySet, cfg: &AnswerConfig) -> String {
    let mut rng = match cfg.trajectory_order {
        TrajectoryOrder::Sorted => None,
        TrajectoryOrder::Shuffled { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
    };

    let mut out = String::from("trajectories:\n");
    match cfg.render_style {
        RenderStyle::Structured => {
            for (id, trajectory) in set.iter() {
                out.push_str(&format!("object: {id}\n"));
                let mut lines: Vec<String> = trajectory
                    .records()
                    .flat_map(|(t, states)| {
                        states
                            .iter()
                            .map(move |atom| format!("  t={}: {atom}\n", t.canonical()))
                    })
                    .collect();
                if let Some(rng) = rng.as_mut() {
                    lines.shuffle(rng);
                }
                for line in lines {
                    out.push_str(&line);
                }
            }
        }
        RenderStyle::Prose => {
            for (id, trajectory) in set.iter() {
                let mut phrases: Vec<String> = trajectory
                    .records()
                    .flat_map(|(t, states)| {
                        states.iter().map(move |atom| {
                            let mut phrase =
                                format!("at {} is {}", t.canonical(), atom.predicate());
                            if let Some(target) = atom.object2() {
                                phrase.push_str(&format!(" {target}"));
                            }
                            phrase
                        })
                    })
                    .collect();
                if let Some(rng) = rng.as_mut() {
                    phrases.shuffle(rng);
                }
                out.push_str(&format!("The object {id} {}.\n", phrases.join(", ")));
            }
        }
        RenderStyle::DenseCaption => {
            let mut events: Vec<(Timestamp, String)> = Vec::new();
            for (id, trajectory) in set.iter() {
                for (t, states) in trajectory.records() {
                    for atom in states {
                        let mut sentence =
                            format!("At {} {id} is {}", t.canonical(), atom.predicate());
                        if let Some(target) = atom.object2() {
                            sentence.push_str(&format!(" {target}"));
                        }
                        sentence.push('.');
                        events.push((t, sentence));
                    }
                }
            }
            events.sort_by(|(ta, sa), (tb, sb)| ta.cmp(tb).then(sa.cmp(sb)));
            let mut sentences: Vec<String> = events.into_iter().map(|(_, s)| s).collect();
            if let Some(rng) = rng.as_mut() {
                sentences.shuffle(rng);
            }
            out.push_str(&sentences.join(" "));
            if !out.ends_with('\n') {
                out.push('\n');
            }
        }
    }
    out
}

/// Keeps whole lines while the running whitespace-token count stays within
/// `budget`; the header line always survives.
pub fn truncate_to_token_budget(block: &str, budget: usize) -> String {
    let mut out = String::new();
    let mut used = 0usize;
    for (i, line) in block.lines().enumerate() {
        let cost = line.split_whitespace().count();
        if i > 0 && used + cost > budget {
            break;
        }
        out.push_str(line);
        out.push('\n');
        used += cost;
    }
    out
}

/// Normalizes raw backend text into a comparable answer. Unmatchable output
/// maps to the sentinel `unparseable`, which always scores as incorrect.
pub fn normalize_answer(raw: &str, query: &Query) -> String {
    match query.expected_form {
        ExpectedForm::FreeText => raw.trim().to_lowercase(),
        ExpectedForm::YesNo => {
            for token in raw_tokens(raw) {
                if token == "yes" || token == "no" {
                    return token;
                }
            }
            "unparseable".to_string()
        }
        ExpectedForm::MultipleChoice => {
            let choices = query.choices.as_deref().unwrap_or_default();
            let tokens: Vec<String> = raw_tokens(raw).collect();
            let normalized_choices: Vec<Vec<String>> =
                choices.iter().map(|c| raw_tokens(c).collect()).collect();
            for (position, token) in tokens.iter().enumerate() {
                // A standalone choice letter: a, b, c, ...
                if token.len() == 1 {
                    let letter = token.chars().next().unwrap();
                    if letter.is_ascii_lowercase() {
                        let index = (letter as u8 - b'a') as usize;
                        if index < choices.len() {
                            return letter.to_ascii_uppercase().to_string();
                        }
                    }
                }
                // The full option text starting at this position.
                for (choice_index, choice_tokens) in normalized_choices.iter().enumerate() {
                    if !choice_tokens.is_empty()
                        && tokens[position..]
                            .iter()
                            .take(choice_tokens.len())
                            .eq(choice_tokens.iter())
                    {
                        let letter = (b'A' + choice_index as u8) as char;
                        return letter.to_string();
                    }
                }
            }
            "unparseable".to_string()
        }
    }
}

fn raw_tokens(raw: &str) -> impl Iterator<Item = String> + '_ {
    raw.split(|c: char| !c.is_alphanumeric())
        .filter(|s| !s.is_empty())
        .map(str::to_lowercase)
}

/// Full answer path: retrieve → render → sample frames → backend → normalize.
///
/// Frames are sampled uniformly over the whole video (`frames_at_answerer` of
/// them); `text_only` sends none and `frames_only` sends an empty block. The
/// trajectory set comes in prebuilt and is only read.
pub fn answer(
    set: &TrajectorySet,
    query: &Query,
    retrieval: &RetrievalConfig,
    answering: &AnswerConfig,
    backend: &dyn AnswerBackend,
    frames: Option<&dyn FrameProvider>,
) -> Result<String> {
    let retrieved = retrieve(set, query, retrieval)?;
    let block = render_trajectories(&retrieved, answering);
    answer_with_block(&set.video_id, block, query, answering, backend, frames)
}

/// Answer path for a prebuilt representation block (used directly by the
/// summarize-aggregation mode). Applies modality and token-budget rules, then
/// calls the backend and normalizes.
pub fn answer_with_block(
    video_id: &str,
    block: String,
    query: &Query,
    answering: &AnswerConfig,
    backend: &dyn AnswerBackend,
    frames: Option<&dyn FrameProvider>,
) -> Result<String> {
    query.validate()?;
    answering.validate()?;

    let trajectory_block = match answering.modality {
        Modality::FramesOnly => String::new(),
        _ => match answering.token_budget {
            Some(budget) => truncate_to_token_budget(&block, budget),
            None => block,
        },
    };

    let frame_refs = match answering.modality {
        Modality::TextOnly => Vec::new(),
        _ => {
            let provider = frames.ok_or_else(|| {
                Error::domain("frame provider required unless modality is text_only")
            })?;
            let duration = provider.duration(video_id)?;
            let whole = Chunk {
                index: 0,
                start: Timestamp::ZERO,
                end: duration,
            };
            let spec = FrameSampleSpec {
                frames_per_chunk: answering.frames_at_answerer,
                strategy: SampleStrategy::Uniform,
            };
            sample_timestamps(&whole, &spec)
                .into_iter()
                .map(|t| provider.frame_ref(video_id, t))
                .collect()
        }
    };

    let request = AnswerRequest {
        question_id: query.question_id.clone(),
        question_text: query.text.clone(),
        choices: query.choices.clone(),
        trajectory_block,
        frame_refs,
    };
    let raw = backend.answer(&request).map_err(|err| match err {
        already @ Error::AnswerBackend { .. } => already,
        other => Error::AnswerBackend {
            question_id: query.question_id.clone(),
            detail: other.to_string(),
        },
    })?;
    Ok(normalize_answer(&raw, query))
}

#[cfg(test)]
mod tests;
