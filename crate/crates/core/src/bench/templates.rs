//! Predicate templates and the clause grammar.
//!
//! Questions are rendered deterministically from per-predicate clause
//! templates instead of free-form model phrasing. A clause reads
//! `<subject> [not] <interrogative> [<object2>]`; the grammar is invertible,
//! which lets an offline answerer parse rendered questions back into the
//! facts they probe.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ObjectId;

/// Clause fragments for one predicate, e.g. for `passes_to`:
/// declarative `passes the ball to`, interrogative `pass the ball to`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Template {
    pub declarative: String,
    pub interrogative: String,
}

/// Predicate → clause templates; the on-disk form is a JSON map.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TemplateTable {
    templates: BTreeMap<String, Template>,
}

impl TemplateTable {
    pub fn new() -> TemplateTable {
        TemplateTable::default()
    }

    pub fn insert(
        &mut self,
        predicate: impl Into<String>,
        declarative: impl Into<String>,
        interrogative: impl Into<String>,
    ) {
        self.templates.insert(
            predicate.into(),
            Template {
                declarative: declarative.into(),
                interrogative: interrogative.into(),
            },
        );
    }

    pub fn get(&self, predicate: &str) -> Result<&Template> {
        self.templates
            .get(predicate)
            .ok_or_else(|| Error::MissingTemplate {
                predicate: predicate.to_string(),
            })
    }

    pub fn from_json_str(json: &str) -> Result<TemplateTable> {
        Ok(serde_json::from_str(json)?)
    }

    pub fn from_json_file(path: &Path) -> Result<TemplateTable> {
        let text = std::fs::read_to_string(path)?;
        TemplateTable::from_json_str(&text)
    }

    /// A table that falls back to the raw predicate token as its own clause.
    /// Handy for synthetic corpora where predicates read fine verbatim.
    pub fn identity_for<'a, I: IntoIterator<Item = &'a str>>(predicates: I) -> TemplateTable {
        let mut table = TemplateTable::new();
        for p in predicates {
            table.insert(p, p, p);
        }
        table
    }

    pub fn predicates(&self) -> impl Iterator<Item = &str> {
        self.templates.keys().map(|s| s.as_str())
    }

    fn iter(&self) -> impl Iterator<Item = (&String, &Template)> {
        self.templates.iter()
    }
}

/// A parsed question clause: which fact shape it asserts, possibly negated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clause {
    pub subject: ObjectId,
    pub predicate: String,
    pub object2: Option<ObjectId>,
    pub negated: bool,
}

/// Renders one clause: `<subject> [not] <interrogative> [<object2>]`.
pub fn render_clause(
    subject: &ObjectId,
    predicate: &str,
    object2: Option<&ObjectId>,
    negated: bool,
    templates: &TemplateTable,
) -> Result<String> {
    let template = templates.get(predicate)?;
    let mut out = String::new();
    out.push_str(subject.as_str());
    if negated {
        out.push_str(" not");
    }
    out.push(' ');
    out.push_str(&template.interrogative);
    if let Some(target) = object2 {
        out.push(' ');
        out.push_str(target.as_str());
    }
    Ok(out)
}

/// Inverts [`render_clause`]: longest interrogative match wins, any remainder
/// is the relation target.
pub fn parse_clause(text: &str, templates: &TemplateTable) -> Result<Clause> {
    let text = text.trim();
    let (subject_token, mut rest) = text
        .split_once(' ')
        .ok_or_else(|| Error::schema(format!("clause too short: {text:?}")))?;
    let subject = ObjectId::parse_normalized(subject_token)?;
    let negated = rest == "not" || rest.starts_with("not ");
    if negated {
        rest = rest.strip_prefix("not").unwrap().trim_start();
    }

    let mut best: Option<(&String, &Template, Option<&str>)> = None;
    for (predicate, template) in templates.iter() {
        let phrase = template.interrogative.as_str();
        let object2 = if rest == phrase {
            Some(None)
        } else {
            rest.strip_prefix(phrase)
                .and_then(|tail| tail.strip_prefix(' '))
                .map(Some)
        };
        if let Some(object2) = object2 {
            let better = match &best {
                Some((_, current, _)) => phrase.len() > current.interrogative.len(),
                None => true,
            };
            if better {
                best = Some((predicate, template, object2));
            }
        }
    }
    let (predicate, _, object2) = best
        .ok_or_else(|| Error::schema(format!("no template matches clause {text:?}")))?;
    let object2 = object2
        .map(ObjectId::parse_normalized)
        .transpose()
        .map_err(|_| Error::schema(format!("clause target is not an object id: {text:?}")))?;
    Ok(Clause {
        subject,
        predicate: predicate.clone(),
        object2,
        negated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> TemplateTable {
        let mut t = TemplateTable::new();
        t.insert("wearing_red_shirt", "wears a red shirt", "wear a red shirt");
        t.insert("passes_to", "passes the ball to", "pass the ball to");
        t.insert("scores_goal", "scores a goal", "score a goal");
        t
    }

    #[test]
    fn clause_round_trip() {
        let templates = table();
        let subject = ObjectId::new("player_66").unwrap();
        let target = ObjectId::new("player_27").unwrap();
        for (object2, negated) in [(None, false), (Some(&target), false), (Some(&target), true)] {
            let text =
                render_clause(&subject, "passes_to", object2, negated, &templates).unwrap();
            let clause = parse_clause(&text, &templates).unwrap();
            assert_eq!(clause.subject, subject);
            assert_eq!(clause.predicate, "passes_to");
            assert_eq!(clause.object2.as_ref(), object2);
            assert_eq!(clause.negated, negated);
        }
    }

    #[test]
    fn longest_interrogative_wins() {
        let mut templates = table();
        templates.insert("passes", "passes the ball", "pass the ball");
        let text = "player_66 pass the ball to player_27";
        let clause = parse_clause(text, &templates).unwrap();
        assert_eq!(clause.predicate, "passes_to");
    }

    #[test]
    fn missing_template_is_reported() {
        let templates = table();
        let err = templates.get("juggles").unwrap_err();
        assert!(matches!(
            err,
            Error::MissingTemplate { predicate } if predicate == "juggles"
        ));
    }

    #[test]
    fn unmatchable_clause_is_schema_error() {
        assert!(parse_clause("player_66 does a backflip", &table()).is_err());
    }
}
