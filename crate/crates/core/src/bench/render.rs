//! Deterministic rendering of reasoning chains into benchmark items.

use crate::error::{Error, Result};
use crate::util::sha256_hex;

use super::templates::{render_clause, TemplateTable};
use super::{
    validate_chain, BenchItem, QuestionType, ReasoningChain, ReviewStatus, SubQuestion,
};

/// Renders a valid chain into one yes/no target question plus one sub-question
/// per fact, all answered "yes".
///
/// `negate` flips one fact's clause into its negation, producing a hard
/// negative: the target answer becomes "no" and so does that fact's
/// sub-question, while the other sub-answers stay "yes".
///
/// The item id is content-derived, so re-rendering the same chain gives the
/// same id. Items start out pending review.
pub fn render_item(
    video_id: &str,
    chain: &ReasoningChain,
    templates: &TemplateTable,
    negate: Option<usize>,
) -> Result<BenchItem> {
    let violations = validate_chain(chain);
    if !violations.is_empty() {
        let summary = violations
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join("; ");
        return Err(Error::schema(format!("chain is not valid: {summary}")));
    }
    if let Some(index) = negate {
        if index >= chain.facts.len() {
            return Err(Error::domain(format!(
                "negation index {index} beyond chain length {}",
                chain.facts.len()
            )));
        }
    }

    let mut clauses = Vec::with_capacity(chain.facts.len());
    for (i, fact) in chain.facts.iter().enumerate() {
        clauses.push(render_clause(
            &fact.subject,
            fact.atom.predicate(),
            fact.atom.object2(),
            negate == Some(i),
            templates,
        )?);
    }

    let target_question = format!("Does {}?", clauses.join(", then "));
    let target_answer = if negate.is_some() { "no" } else { "yes" };
    let sub_questions: Vec<SubQuestion> = clauses
        .iter()
        .enumerate()
        .map(|(i, clause)| SubQuestion {
            text: format!("Does {clause}?"),
            answer: if negate == Some(i) { "no" } else { "yes" }.to_string(),
            fact_index: i,
            error_tag: None,
        })
        .collect();

    let fingerprint = {
        let chain_json = serde_json::to_string(chain)?;
        let marker = match negate {
            Some(i) => format!("|neg{i}"),
            None => String::new(),
        };
        sha256_hex(format!("{video_id}|{chain_json}{marker}").as_bytes())
    };

    Ok(BenchItem {
        item_id: format!("item-{}", &fingerprint[..12]),
        video_id: video_id.to_string(),
        target_question,
        target_answer: target_answer.to_string(),
        sub_questions,
        chain: chain.clone(),
        question_type: classify(chain),
        review_status: ReviewStatus::Pending,
    })
}

/// Deterministic category rule, checked in priority order: two or more
/// relations make it a multi-object interaction; a subject showing two
/// distinct unary predicates makes it a state change; facts spanning more
/// than one timestamp make it an action sequence; single-timestamp chains
/// probe identity binding.
fn classify(chain: &ReasoningChain) -> QuestionType {
    if chain.relation_count() >= 2 {
        return QuestionType::MultiObjectInteraction;
    }
    let mut unary_by_subject: std::collections::BTreeMap<&str, std::collections::BTreeSet<&str>> =
        std::collections::BTreeMap::new();
    for fact in &chain.facts {
        if !fact.atom.is_relation() {
            unary_by_subject
                .entry(fact.subject.as_str())
                .or_default()
                .insert(fact.atom.predicate());
        }
    }
    if unary_by_subject.values().any(|preds| preds.len() >= 2) {
        return QuestionType::StateChange;
    }
    let timestamps: std::collections::BTreeSet<_> = chain.facts.iter().map(|f| f.t).collect();
    if timestamps.len() >= 2 {
        return QuestionType::ActionSequence;
    }
    QuestionType::IdentityTracking
}

#[cfg(test)]
mod tests {
    use super::super::test_fixtures::*;
    use super::*;

    fn table() -> TemplateTable {
        let mut t = TemplateTable::new();
        t.insert("wearing_red_shirt", "wears a red shirt", "wear a red shirt");
        t.insert("passes_to", "passes the ball to", "pass the ball to");
        t.insert("scores_goal", "scores a goal", "score a goal");
        t
    }

    #[test]
    fn player_chain_renders_three_sub_questions() {
        let item = render_item("v1", &player_chain(), &table(), None).unwrap();
        assert_eq!(item.sub_questions.len(), 3);
        assert_eq!(
            item.sub_questions[0].text,
            "Does player_66 wear a red shirt?"
        );
        assert_eq!(
            item.sub_questions[1].text,
            "Does player_66 pass the ball to player_27?"
        );
        assert_eq!(item.sub_questions[2].text, "Does player_27 score a goal?");
        assert_eq!(
            item.target_question,
            "Does player_66 wear a red shirt, then player_66 pass the ball to player_27, \
             then player_27 score a goal?"
        );
        assert_eq!(item.target_answer, "yes");
        assert!(item.validate().is_ok());
    }

    #[test]
    fn sub_question_count_equals_chain_length() {
        let chain = ReasoningChain {
            facts: vec![
                fact_relation(1.0, "a", "passes_to", "b"),
                fact_unary(2.0, "b", "scores_goal"),
            ],
        };
        let item = render_item("v1", &chain, &table(), None).unwrap();
        assert_eq!(item.sub_questions.len(), chain.facts.len());
    }

    #[test]
    fn negation_flips_one_sub_answer() {
        let item = render_item("v1", &player_chain(), &table(), Some(1)).unwrap();
        assert_eq!(item.target_answer, "no");
        let answers: Vec<&str> = item
            .sub_questions
            .iter()
            .map(|s| s.answer.as_str())
            .collect();
        assert_eq!(answers, vec!["yes", "no", "yes"]);
        assert!(item
            .target_question
            .contains("player_66 not pass the ball to player_27"));
    }

    #[test]
    fn missing_template_names_the_predicate() {
        let mut sparse = TemplateTable::new();
        sparse.insert("wearing_red_shirt", "wears a red shirt", "wear a red shirt");
        let err = render_item("v1", &player_chain(), &sparse, None).unwrap_err();
        assert!(matches!(
            err,
            Error::MissingTemplate { predicate } if predicate == "passes_to"
        ));
    }

    #[test]
    fn invalid_chain_is_rejected() {
        let chain = ReasoningChain {
            facts: vec![fact_unary(1.0, "a", "scores_goal")],
        };
        assert!(render_item("v1", &chain, &table(), None).is_err());
    }

    #[test]
    fn item_ids_are_content_stable() {
        let a = render_item("v1", &player_chain(), &table(), None).unwrap();
        let b = render_item("v1", &player_chain(), &table(), None).unwrap();
        let negated = render_item("v1", &player_chain(), &table(), Some(0)).unwrap();
        assert_eq!(a.item_id, b.item_id);
        assert_ne!(a.item_id, negated.item_id);
    }

    #[test]
    fn classification_rules() {
        assert_eq!(
            render_item("v", &player_chain(), &table(), None)
                .unwrap()
                .question_type,
            QuestionType::ActionSequence
        );
        let mut t = table();
        t.insert("hugs", "hugs", "hug");
        let two_relations = ReasoningChain {
            facts: vec![
                fact_relation(1.0, "a", "passes_to", "b"),
                fact_relation(2.0, "b", "hugs", "a"),
            ],
        };
        assert_eq!(
            render_item("v", &two_relations, &t, None)
                .unwrap()
                .question_type,
            QuestionType::MultiObjectInteraction
        );
        t.insert("sitting", "sits down", "sit down");
        t.insert("standing", "stands up", "stand up");
        let state_change = ReasoningChain {
            facts: vec![
                fact_unary(1.0, "a", "sitting"),
                fact_relation(2.0, "a", "passes_to", "b"),
                fact_unary(2.0, "a", "standing"),
            ],
        };
        assert_eq!(
            render_item("v", &state_change, &t, None)
                .unwrap()
                .question_type,
            QuestionType::StateChange
        );
    }
}
