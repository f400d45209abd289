//! Benchmark-item machinery: fact tuples, reasoning-chain validity,
//! template-based question rendering, and dataset statistics.
//!
//! Items pair one compositional target question with atomic sub-questions,
//! each probing exactly one fact of the underlying reasoning chain, so an
//! evaluation can separate genuine multi-step understanding from lucky
//! final answers.

mod agreement;
mod render;
mod templates;

pub use agreement::{cohen_kappa, AgreementSample};
pub use render::render_item;
pub use templates::{parse_clause, render_clause, Clause, Template, TemplateTable};

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ObjectId, StateAtom, Timestamp};

/// One annotated fact: subject `o` shows `atom` at time `t`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Fact {
    pub t: Timestamp,
    pub subject: ObjectId,
    pub atom: StateAtom,
}

impl Fact {
    /// The entities this fact touches: its subject plus, for relations, the
    /// target object.
    pub fn entities(&self) -> BTreeSet<&ObjectId> {
        let mut set = BTreeSet::new();
        set.insert(&self.subject);
        if let Some(target) = self.atom.object2() {
            set.insert(target);
        }
        set
    }
}

/// An ordered fact sequence intended to support one target question.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReasoningChain {
    pub facts: Vec<Fact>,
}

impl ReasoningChain {
    pub fn relation_count(&self) -> usize {
        self.facts.iter().filter(|f| f.atom.is_relation()).count()
    }
}

/// A violated chain constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChainViolation {
    /// Fewer than two facts.
    Length,
    /// Timestamps decrease somewhere.
    Monotonicity,
    /// No multi-object interaction (relation fact) anywhere.
    Interaction,
    /// Some consecutive pair shares no entity.
    Connectivity,
}

impl std::fmt::Display for ChainViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            ChainViolation::Length => "chain shorter than two facts",
            ChainViolation::Monotonicity => "timestamps not nondecreasing",
            ChainViolation::Interaction => "no multi-object interaction",
            ChainViolation::Connectivity => "consecutive facts share no entity",
        };
        f.write_str(name)
    }
}

/// Checks all chain constraints and returns every violation (empty = valid):
/// at least two facts, nondecreasing timestamps, at least one relation, and
/// consecutive facts sharing an entity.
pub fn validate_chain(chain: &ReasoningChain) -> Vec<ChainViolation> {
    let facts = &chain.facts;
    let mut violations = Vec::new();
    if facts.len() < 2 {
        violations.push(ChainViolation::Length);
    }
    if facts.windows(2).any(|w| w[1].t < w[0].t) {
        violations.push(ChainViolation::Monotonicity);
    }
    if !facts.iter().any(|f| f.atom.is_relation()) {
        violations.push(ChainViolation::Interaction);
    }
    if facts
        .windows(2)
        .any(|w| w[0].entities().intersection(&w[1].entities()).count() == 0)
    {
        violations.push(ChainViolation::Connectivity);
    }
    violations
}

/// Enumerates every valid chain of length `2..=max_len` over the fact set.
///
/// Facts are first brought into canonical order (by time, then subject, then
/// atom) and deduplicated; chains are the index-increasing subsequences that
/// pass [`validate_chain`], emitted in lexicographic index order. Sorting
/// makes temporal monotonicity structural, so the only pruning needed during
/// the walk is entity connectivity.
pub fn enumerate_chains(facts: &[Fact], max_len: usize) -> Result<Vec<ReasoningChain>> {
    if max_len < 2 {
        return Err(Error::domain("max_len must be at least 2"));
    }
    let mut canon: Vec<Fact> = facts.to_vec();
    canon.sort();
    canon.dedup();

    fn extend(
        canon: &[Fact],
        max_len: usize,
        prefix: &mut Vec<usize>,
        out: &mut Vec<ReasoningChain>,
    ) {
        let start = prefix.last().map_or(0, |&i| i + 1);
        for next in start..canon.len() {
            if let Some(&last) = prefix.last() {
                if canon[last]
                    .entities()
                    .intersection(&canon[next].entities())
                    .count()
                    == 0
                {
                    continue;
                }
            }
            prefix.push(next);
            let chain = ReasoningChain {
                facts: prefix.iter().map(|&i| canon[i].clone()).collect(),
            };
            if prefix.len() >= 2 && validate_chain(&chain).is_empty() {
                out.push(chain);
            }
            if prefix.len() < max_len {
                extend(canon, max_len, prefix, out);
            }
            prefix.pop();
        }
    }

    let mut out = Vec::new();
    extend(&canon, max_len, &mut Vec::new(), &mut out);
    Ok(out)
}

/// Target-question category, assigned at rendering time by a deterministic
/// rule over the chain's shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuestionType {
    StateChange,
    IdentityTracking,
    ActionSequence,
    MultiObjectInteraction,
}

/// Sub-question failure mode; supplied as a per-sub-question label in the
/// corpus, never inferred by the evaluator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorMode {
    ObjectHallucination,
    StateMisattribution,
    TemporalOrderError,
}

/// Review state of one item; official runs only accept approved items.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ReviewStatus {
    #[default]
    Pending,
    Approved,
    Discarded,
}

/// An atomic probe of one chain fact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubQuestion {
    pub text: String,
    pub answer: String,
    pub fact_index: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_tag: Option<ErrorMode>,
}

/// A target question with its supporting sub-questions and fact chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BenchItemRepr", into = "BenchItemRepr")]
pub struct BenchItem {
    pub item_id: String,
    pub video_id: String,
    pub target_question: String,
    pub target_answer: String,
    pub sub_questions: Vec<SubQuestion>,
    pub chain: ReasoningChain,
    pub question_type: QuestionType,
    pub review_status: ReviewStatus,
}

#[derive(Serialize, Deserialize)]
struct BenchItemRepr {
    item_id: String,
    video_id: String,
    target_question: String,
    target_answer: String,
    sub_questions: Vec<SubQuestion>,
    chain: ReasoningChain,
    question_type: QuestionType,
    #[serde(default)]
    review_status: ReviewStatus,
}

impl BenchItem {
    /// Validates the fact↔sub-question mapping: every index in range, every
    /// chain fact probed by exactly one sub-question.
    pub fn validate(&self) -> Result<()> {
        let n = self.chain.facts.len();
        let mut probed = vec![0usize; n];
        for sub in &self.sub_questions {
            if sub.fact_index >= n {
                return Err(Error::schema(format!(
                    "item {}: sub-question probes fact {} beyond chain length {}",
                    self.item_id, sub.fact_index, n
                )));
            }
            probed[sub.fact_index] += 1;
        }
        if let Some(missing) = probed.iter().position(|&count| count != 1) {
            return Err(Error::schema(format!(
                "item {}: fact {} probed {} times (expected exactly once)",
                self.item_id, missing, probed[missing]
            )));
        }
        Ok(())
    }
}

impl TryFrom<BenchItemRepr> for BenchItem {
    type Error = Error;

    fn try_from(repr: BenchItemRepr) -> Result<BenchItem> {
        let item = BenchItem {
            item_id: repr.item_id,
            video_id: repr.video_id,
            target_question: repr.target_question,
            target_answer: repr.target_answer,
            sub_questions: repr.sub_questions,
            chain: repr.chain,
            question_type: repr.question_type,
            review_status: repr.review_status,
        };
        item.validate()?;
        Ok(item)
    }
}

impl From<BenchItem> for BenchItemRepr {
    fn from(item: BenchItem) -> BenchItemRepr {
        BenchItemRepr {
            item_id: item.item_id,
            video_id: item.video_id,
            target_question: item.target_question,
            target_answer: item.target_answer,
            sub_questions: item.sub_questions,
            chain: item.chain,
            question_type: item.question_type,
            review_status: item.review_status,
        }
    }
}

/// Corpus-level counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub videos: usize,
    pub targets: usize,
    pub sub_questions: usize,
    pub mean_subs_per_target: f64,
    pub per_type: BTreeMap<QuestionType, usize>,
}

pub fn dataset_stats(items: &[BenchItem]) -> DatasetStats {
    let videos: BTreeSet<&str> = items.iter().map(|i| i.video_id.as_str()).collect();
    let targets = items.len();
    let sub_questions: usize = items.iter().map(|i| i.sub_questions.len()).sum();
    let mut per_type = BTreeMap::new();
    for item in items {
        *per_type.entry(item.question_type).or_insert(0) += 1;
    }
    DatasetStats {
        videos: videos.len(),
        targets,
        sub_questions,
        mean_subs_per_target: if targets == 0 {
            0.0
        } else {
            sub_questions as f64 / targets as f64
        },
        per_type,
    }
}
