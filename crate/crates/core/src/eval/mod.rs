//! The metric suite: target accuracy, pooled sub-question accuracy,
//! consistency over the correct set, breakdown reports, paired-bootstrap
//! significance, and audit modes over stored predictions.

mod audit;
mod bootstrap;
mod report;

pub use audit::{run_audit, AuditMode};
pub use bootstrap::{paired_bootstrap, BootstrapResult};
pub use report::render_text_table;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::bench::{BenchItem, ErrorMode, QuestionType};
use crate::error::{Error, Result};

/// Stored predictions for one item: the target answer plus one answer per
/// sub-question, in sub-question order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub item_id: String,
    pub target_pred: String,
    pub sub_preds: Vec<String>,
}

/// The full metric report over one prediction set.
///
/// `a_sub` pools every sub-question (micro average); `a_cons` averages
/// per-item sub-accuracy over the items whose target was answered correctly
/// (macro within the correct set) and is undefined when nothing was.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub a_target: f64,
    pub a_sub: f64,
    pub a_cons: Option<f64>,
    pub n_targets: usize,
    pub n_subs: usize,
    pub n_correct_targets: usize,
    /// Per-question-type consistency over that type's correct items.
    pub breakdowns: BTreeMap<QuestionType, Option<f64>>,
    /// Fraction of tagged incorrect sub-answers per failure mode, computed
    /// over items whose target failed. Tags come from the corpus; nothing is
    /// inferred. Empty when no failed item carries tagged incorrect subs.
    pub error_modes: BTreeMap<ErrorMode, f64>,
}

/// Pairs every item with its prediction, failing loudly on gaps or shape
/// mismatches.
fn align<'a>(
    items: &'a [BenchItem],
    preds: &'a [PredictionRecord],
) -> Result<Vec<(&'a BenchItem, &'a PredictionRecord)>> {
    let by_id: BTreeMap<&str, &PredictionRecord> =
        preds.iter().map(|p| (p.item_id.as_str(), p)).collect();
    let missing: Vec<String> = items
        .iter()
        .filter(|item| !by_id.contains_key(item.item_id.as_str()))
        .map(|item| item.item_id.clone())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingPredictions { item_ids: missing });
    }
    let mut aligned = Vec::with_capacity(items.len());
    for item in items {
        let pred = by_id[item.item_id.as_str()];
        if pred.sub_preds.len() != item.sub_questions.len() {
            return Err(Error::PredictionShape {
                item_id: item.item_id.clone(),
                got: pred.sub_preds.len(),
                expected: item.sub_questions.len(),
            });
        }
        aligned.push((item, pred));
    }
    Ok(aligned)
}

fn target_correct(item: &BenchItem, pred: &PredictionRecord) -> bool {
    pred.target_pred == item.target_answer
}

fn sub_correct_count(item: &BenchItem, pred: &PredictionRecord) -> usize {
    item.sub_questions
        .iter()
        .zip(&pred.sub_preds)
        .filter(|(sub, answer)| *answer == &sub.answer)
        .count()
}

/// Fraction of items whose target prediction equals the gold answer.
pub fn a_target(items: &[BenchItem], preds: &[PredictionRecord]) -> Result<f64> {
    let aligned = align(items, preds)?;
    if aligned.is_empty() {
        return Err(Error::domain("a_target over zero items"));
    }
    let correct = aligned
        .iter()
        .filter(|(item, pred)| target_correct(item, pred))
        .count();
    Ok(correct as f64 / aligned.len() as f64)
}

/// Pooled accuracy over all sub-questions of all items.
pub fn a_sub(items: &[BenchItem], preds: &[PredictionRecord]) -> Result<f64> {
    let aligned = align(items, preds)?;
    let total: usize = aligned.iter().map(|(item, _)| item.sub_questions.len()).sum();
    if total == 0 {
        return Err(Error::domain("a_sub over zero sub-questions"));
    }
    let correct: usize = aligned
        .iter()
        .map(|(item, pred)| sub_correct_count(item, pred))
        .sum();
    Ok(correct as f64 / total as f64)
}

/// Mean per-item sub-accuracy over the items whose target was answered
/// correctly; `None` when that set is empty.
pub fn a_cons(items: &[BenchItem], preds: &[PredictionRecord]) -> Result<Option<f64>> {
    let aligned = align(items, preds)?;
    Ok(consistency_over(aligned.iter().copied()))
}

fn consistency_over<'a, I>(aligned: I) -> Option<f64>
where
    I: Iterator<Item = (&'a BenchItem, &'a PredictionRecord)>,
{
    let mut correct_items = 0usize;
    let mut total = 0.0f64;
    for (item, pred) in aligned {
        if !target_correct(item, pred) || item.sub_questions.is_empty() {
            continue;
        }
        correct_items += 1;
        total += sub_correct_count(item, pred) as f64 / item.sub_questions.len() as f64;
    }
    (correct_items > 0).then(|| total / correct_items as f64)
}

/// Computes the whole report in one pass.
pub fn compute_report(items: &[BenchItem], preds: &[PredictionRecord]) -> Result<MetricReport> {
    let aligned = align(items, preds)?;
    if aligned.is_empty() {
        return Err(Error::domain("report over zero items"));
    }
    let n_targets = aligned.len();
    let n_subs: usize = aligned.iter().map(|(item, _)| item.sub_questions.len()).sum();
    let n_correct_targets = aligned
        .iter()
        .filter(|(item, pred)| target_correct(item, pred))
        .count();

    let mut breakdowns: BTreeMap<QuestionType, Option<f64>> = BTreeMap::new();
    let types: std::collections::BTreeSet<QuestionType> =
        aligned.iter().map(|(item, _)| item.question_type).collect();
    for question_type in types {
        let per_type = consistency_over(
            aligned
                .iter()
                .copied()
                .filter(|(item, _)| item.question_type == question_type),
        );
        breakdowns.insert(question_type, per_type);
    }

    let mut tagged_incorrect: BTreeMap<ErrorMode, usize> = BTreeMap::new();
    let mut tagged_total = 0usize;
    for (item, pred) in &aligned {
        if target_correct(item, pred) {
            continue;
        }
        for (sub, answer) in item.sub_questions.iter().zip(&pred.sub_preds) {
            if answer != &sub.answer {
                if let Some(tag) = sub.error_tag {
                    *tagged_incorrect.entry(tag).or_insert(0) += 1;
                    tagged_total += 1;
                }
            }
        }
    }
    let error_modes = tagged_incorrect
        .into_iter()
        .map(|(mode, count)| (mode, count as f64 / tagged_total as f64))
        .collect();

    Ok(MetricReport {
        a_target: a_target(items, preds)?,
        a_sub: a_sub(items, preds)?,
        a_cons: consistency_over(aligned.iter().copied()),
        n_targets,
        n_subs,
        n_correct_targets,
        breakdowns,
        error_modes,
    })
}

#[cfg(test)]
pub(crate) mod test_fixtures {
    use super::*;
    use crate::bench::{
        Fact, QuestionType, ReasoningChain, ReviewStatus, SubQuestion,
    };
    use crate::model::{ObjectId, StateAtom, Timestamp};

    /// A structurally valid item with `subs` sub-questions, all answered
    /// "yes" in gold.
    pub fn item(id: &str, subs: usize) -> BenchItem {
        item_of_type(id, subs, QuestionType::ActionSequence)
    }

    pub fn item_of_type(id: &str, subs: usize, question_type: QuestionType) -> BenchItem {
        let facts: Vec<Fact> = (0..subs)
            .map(|i| Fact {
                t: Timestamp::from_millis(i as u64 * 1000),
                subject: ObjectId::new("obj").unwrap(),
                atom: StateAtom::unary(&format!("state_{i}")).unwrap(),
            })
            .collect();
        BenchItem {
            item_id: id.to_string(),
            video_id: "v".to_string(),
            target_question: "Does obj do things?".to_string(),
            target_answer: "yes".to_string(),
            sub_questions: (0..subs)
                .map(|i| SubQuestion {
                    text: format!("Does obj do thing {i}?"),
                    answer: "yes".to_string(),
                    fact_index: i,
                    error_tag: None,
                })
                .collect(),
            chain: ReasoningChain { facts },
            question_type,
            review_status: ReviewStatus::Approved,
        }
    }

    /// Prediction with the target right or wrong and the first
    /// `correct_subs` sub-answers right.
    pub fn pred(id: &str, target_ok: bool, subs: usize, correct_subs: usize) -> PredictionRecord {
        PredictionRecord {
            item_id: id.to_string(),
            target_pred: if target_ok { "yes" } else { "no" }.to_string(),
            sub_preds: (0..subs)
                .map(|i| if i < correct_subs { "yes" } else { "no" }.to_string())
                .collect(),
        }
    }
}
