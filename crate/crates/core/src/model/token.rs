//! Token normalization and object identifiers.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Normalizes free text into a canonical token: lowercase, with every run of
/// whitespace/punctuation collapsed to a single underscore and stripped from
/// the ends. Idempotent by construction.
///
/// `"Red Shirt"` becomes `red_shirt`; `"passes  to "` becomes `passes_to`.
pub fn normalize_token(raw: &str) -> Result<String> {
    let mut out = String::with_capacity(raw.len());
    let mut pending_sep = false;
    for ch in raw.chars() {
        if ch.is_alphanumeric() {
            if pending_sep && !out.is_empty() {
                out.push('_');
            }
            pending_sep = false;
            for lower in ch.to_lowercase() {
                if lower.is_alphanumeric() {
                    out.push(lower);
                }
            }
        } else {
            pending_sep = true;
        }
    }
    if out.is_empty() {
        return Err(Error::EmptyToken {
            raw: raw.to_string(),
        });
    }
    Ok(out)
}

/// True when `text` is already in normalized form.
pub fn is_normalized(text: &str) -> bool {
    matches!(normalize_token(text), Ok(normalized) if normalized == text)
}

/// A persistent object identity: a normalized token such as `player_66` or
/// `leftmost_suitcase`.
///
/// Serializes as `{"id": "player_66"}`; maps keyed by `ObjectId` use the bare
/// token as the JSON key.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "ObjectIdRepr", into = "ObjectIdRepr")]
pub struct ObjectId(String);

#[derive(Serialize, Deserialize)]
struct ObjectIdRepr {
    id: String,
}

impl ObjectId {
    /// Builds an id from free text, normalizing it.
    pub fn new(raw: &str) -> Result<ObjectId> {
        Ok(ObjectId(normalize_token(raw)?))
    }

    /// Accepts only already-normalized tokens; used when parsing canonical
    /// files, where a non-normalized id indicates a malformed input.
    pub fn parse_normalized(text: &str) -> Result<ObjectId> {
        let normalized = normalize_token(text)?;
        if normalized != text {
            return Err(Error::schema(format!(
                "object id {text:?} is not normalized (expected {normalized:?})"
            )));
        }
        Ok(ObjectId(normalized))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Appends `_<ordinal>` to disambiguate colliding ids.
    pub fn with_ordinal(&self, ordinal: usize) -> ObjectId {
        ObjectId(format!("{}_{}", self.0, ordinal))
    }
}

impl fmt::Display for ObjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl TryFrom<ObjectIdRepr> for ObjectId {
    type Error = Error;

    fn try_from(repr: ObjectIdRepr) -> Result<ObjectId> {
        ObjectId::parse_normalized(&repr.id)
    }
}

impl From<ObjectId> for ObjectIdRepr {
    fn from(id: ObjectId) -> ObjectIdRepr {
        ObjectIdRepr { id: id.0 }
    }
}

/// Serde adapter for maps keyed by [`ObjectId`]: the JSON key is the bare
/// normalized token.
pub mod id_key_map {
    use std::collections::BTreeMap;

    use serde::de::Error as DeError;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use super::ObjectId;

    pub fn serialize<V, S>(map: &BTreeMap<ObjectId, V>, serializer: S) -> Result<S::Ok, S::Error>
    where
        V: Serialize,
        S: Serializer,
    {
        serializer.collect_map(map.iter().map(|(k, v)| (k.as_str(), v)))
    }

    pub fn deserialize<'de, V, D>(deserializer: D) -> Result<BTreeMap<ObjectId, V>, D::Error>
    where
        V: Deserialize<'de>,
        D: Deserializer<'de>,
    {
        let raw = BTreeMap::<String, V>::deserialize(deserializer)?;
        let mut out = BTreeMap::new();
        for (key, value) in raw {
            let id = ObjectId::parse_normalized(&key).map_err(D::Error::custom)?;
            out.insert(id, value);
        }
        Ok(out)
    }
}
