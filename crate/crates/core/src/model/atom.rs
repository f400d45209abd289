//! State atoms: one observable property or relation at a timestamp.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::token::{is_normalized, normalize_token, ObjectId};

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum AtomKind {
    Unary,
    Relation,
}

/// One observable unary property (`walking`, `wearing_red_shirt`) or directed
/// binary relation (`passes_to → player_27`) of an object.
///
/// Relations are stored directed: the subject holds the atom and `object2`
/// names the target; no inverse atom is generated.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "StateAtomRepr", into = "StateAtomRepr")]
pub struct StateAtom {
    kind: AtomKind,
    predicate: String,
    object2: Option<ObjectId>,
}

#[derive(Serialize, Deserialize)]
struct StateAtomRepr {
    kind: AtomKind,
    predicate: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    object2: Option<ObjectId>,
}

impl StateAtom {
    /// Unary state from free text, normalizing the predicate.
    pub fn unary(predicate: &str) -> Result<StateAtom> {
        Ok(StateAtom {
            kind: AtomKind::Unary,
            predicate: normalize_token(predicate)?,
            object2: None,
        })
    }

    /// Directed relation from free text, normalizing the predicate.
    pub fn relation(predicate: &str, object2: ObjectId) -> Result<StateAtom> {
        Ok(StateAtom {
            kind: AtomKind::Relation,
            predicate: normalize_token(predicate)?,
            object2: Some(object2),
        })
    }

    pub fn kind(&self) -> AtomKind {
        self.kind
    }

    pub fn predicate(&self) -> &str {
        &self.predicate
    }

    pub fn object2(&self) -> Option<&ObjectId> {
        self.object2.as_ref()
    }

    pub fn is_relation(&self) -> bool {
        self.kind == AtomKind::Relation
    }
}

impl fmt::Display for StateAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.object2 {
            Some(target) => write!(f, "{} → {}", self.predicate, target),
            None => f.write_str(&self.predicate),
        }
    }
}

impl TryFrom<StateAtomRepr> for StateAtom {
    type Error = Error;

    fn try_from(repr: StateAtomRepr) -> Result<StateAtom> {
        if !is_normalized(&repr.predicate) {
            return Err(Error::schema(format!(
                "predicate {:?} is not a normalized token",
                repr.predicate
            )));
        }
        match (repr.kind, repr.object2.is_some()) {
            (AtomKind::Unary, true) => Err(Error::schema(format!(
                "unary atom {:?} must not carry object2",
                repr.predicate
            ))),
            (AtomKind::Relation, false) => Err(Error::schema(format!(
                "relation atom {:?} requires object2",
                repr.predicate
            ))),
            _ => Ok(StateAtom {
                kind: repr.kind,
                predicate: repr.predicate,
                object2: repr.object2,
            }),
        }
    }
}

impl From<StateAtom> for StateAtomRepr {
    fn from(atom: StateAtom) -> StateAtomRepr {
        StateAtomRepr {
            kind: atom.kind,
            predicate: atom.predicate,
            object2: atom.object2,
        }
    }
}
