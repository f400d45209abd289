//! Deterministic offline answerer that reasons by lookup over the rendered
//! trajectory block.
//!
//! Questions produced by the template renderer are parsed back into their
//! clauses; each clause is checked against the atoms present in the block
//! (structured style). The backend answers "yes" when every positive clause
//! has supporting evidence and every negated clause has none — so its answers
//! degrade honestly when the block is incomplete, which is exactly what the
//! shortcut and budget audits measure.

use std::collections::BTreeSet;
use std::sync::atomic::{AtomicUsize, Ordering};

use crate::bench::{parse_clause, TemplateTable};
use crate::error::Result;
use crate::model::ObjectId;

use super::backend::{AnswerBackend, AnswerRequest};

type Evidence = (ObjectId, String, Option<ObjectId>);

pub struct TrajectoryLookupBackend {
    templates: TemplateTable,
    calls: AtomicUsize,
}

impl TrajectoryLookupBackend {
    pub fn new(templates: TemplateTable) -> TrajectoryLookupBackend {
        TrajectoryLookupBackend {
            templates,
            calls: AtomicUsize::new(0),
        }
    }

    pub fn call_count(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    /// Atoms present in a structured trajectory block.
    fn parse_block(block: &str) -> BTreeSet<Evidence> {
        let mut evidence = BTreeSet::new();
        let mut current: Option<ObjectId> = None;
        for line in block.lines() {
            if let Some(id_text) = line.strip_prefix("object: ") {
                current = ObjectId::parse_normalized(id_text.trim()).ok();
                continue;
            }
            let Some(subject) = current.clone() else {
                continue;
            };
            let Some(rest) = line.trim_start().strip_prefix("t=") else {
                continue;
            };
            let Some((_, atom_text)) = rest.split_once(": ") else {
                continue;
            };
            let (predicate, object2) = match atom_text.split_once(" → ") {
                Some((p, target)) => match ObjectId::parse_normalized(target.trim()) {
                    Ok(target) => (p.trim(), Some(target)),
                    Err(_) => continue,
                },
                None => (atom_text.trim(), None),
            };
            evidence.insert((subject, predicate.to_string(), object2));
        }
        evidence
    }

    fn split_question(text: &str) -> Option<Vec<&str>> {
        let stripped = text.strip_prefix("Does ")?.strip_suffix('?')?;
        Some(stripped.split(", then ").collect())
    }
}

impl AnswerBackend for TrajectoryLookupBackend {
    fn answer(&self, request: &AnswerRequest) -> Result<String> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let Some(clause_texts) = Self::split_question(&request.question_text) else {
            return Ok("unparseable".to_string());
        };
        let evidence = Self::parse_block(&request.trajectory_block);
        for clause_text in clause_texts {
            let Ok(clause) = parse_clause(clause_text, &self.templates) else {
                return Ok("unparseable".to_string());
            };
            let present = evidence.contains(&(
                clause.subject.clone(),
                clause.predicate.clone(),
                clause.object2.clone(),
            ));
            let satisfied = present != clause.negated;
            if !satisfied {
                return Ok("no".to_string());
            }
        }
        Ok("yes".to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::answering::{render_trajectories, AnswerConfig};
    use crate::model::{StateAtom, Timestamp, Trajectory, TrajectorySet};

    fn templates() -> TemplateTable {
        let mut t = TemplateTable::new();
        t.insert("wearing_red_shirt", "wears a red shirt", "wear a red shirt");
        t.insert("passes_to", "passes the ball to", "pass the ball to");
        t.insert("scores_goal", "scores a goal", "score a goal");
        t
    }

    fn sample_set() -> TrajectorySet {
        let mut set = TrajectorySet::new("v1", "test");
        let p66 = ObjectId::new("player_66").unwrap();
        let p27 = ObjectId::new("player_27").unwrap();
        let mut a = Trajectory::new(p66.clone(), (0, p66.clone()));
        a.merge_record(
            Timestamp::from_millis(2000),
            [
                StateAtom::unary("wearing_red_shirt").unwrap(),
                StateAtom::relation("passes_to", p27.clone()).unwrap(),
            ],
        );
        set.insert(a).unwrap();
        let mut b = Trajectory::new(p27.clone(), (0, p27.clone()));
        b.merge_record(
            Timestamp::from_millis(9000),
            [StateAtom::unary("scores_goal").unwrap()],
        );
        set.insert(b).unwrap();
        set
    }

    fn request(question: &str, block: String) -> AnswerRequest {
        AnswerRequest {
            question_id: "q".into(),
            question_text: question.into(),
            choices: None,
            trajectory_block: block,
            frame_refs: vec![],
        }
    }

    #[test]
    fn answers_yes_when_all_clauses_evidenced() {
        let block = render_trajectories(&sample_set(), &AnswerConfig::default());
        let backend = TrajectoryLookupBackend::new(templates());
        let q = "Does player_66 wear a red shirt, then player_66 pass the ball to player_27, \
                 then player_27 score a goal?";
        assert_eq!(backend.answer(&request(q, block)).unwrap(), "yes");
    }

    #[test]
    fn answers_no_when_evidence_is_missing() {
        let block = render_trajectories(&sample_set(), &AnswerConfig::default());
        let backend = TrajectoryLookupBackend::new(templates());
        let q = "Does player_27 wear a red shirt?";
        assert_eq!(backend.answer(&request(q, block)).unwrap(), "no");
    }

    #[test]
    fn negated_clause_inverts_the_check() {
        let block = render_trajectories(&sample_set(), &AnswerConfig::default());
        let backend = TrajectoryLookupBackend::new(templates());
        // The pass did happen, so its negation is false.
        let q = "Does player_66 not pass the ball to player_27?";
        assert_eq!(
            backend.answer(&request(q, block.clone())).unwrap(),
            "no"
        );
        let q = "Does player_27 not wear a red shirt?";
        assert_eq!(backend.answer(&request(q, block)).unwrap(), "yes");
    }

    #[test]
    fn non_template_questions_are_unparseable() {
        let backend = TrajectoryLookupBackend::new(templates());
        let r = request("What color is the shirt?", String::new());
        assert_eq!(backend.answer(&r).unwrap(), "unparseable");
    }
}
