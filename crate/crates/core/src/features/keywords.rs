//! Vocabulary-matching keyword extraction.

use std::collections::HashMap;

use crate::ckg::{EntityId, EntityKind, Vocabulary};

/// Lowercased keyword names mapped to their entity ids.
#[derive(Debug, Clone, Default)]
pub struct KeywordVocab {
    ids: HashMap<String, EntityId>,
}

impl KeywordVocab {
    pub fn from_vocabulary(vocab: &Vocabulary) -> Self {
        let mut ids = HashMap::new();
        for id in vocab.ids_of_kind(EntityKind::Keyword) {
            ids.entry(vocab.name(id).to_lowercase()).or_insert(id);
        }
        Self { ids }
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, EntityId)>) -> Self {
        Self {
            ids: pairs.into_iter().map(|(k, v)| (k.to_lowercase(), v)).collect(),
        }
    }

    pub fn get(&self, token: &str) -> Option<EntityId> {
        self.ids.get(token).copied()
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// Lowercased tokens split on anything that is not alphanumeric or `_`.
pub fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !(c.is_alphanumeric() || c == '_'))
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
}

/// In-vocabulary tokens of `text`, first occurrences only, at most `cap`.
pub fn extract_keywords(text: &str, vocab: &KeywordVocab, cap: usize) -> Vec<EntityId> {
    let mut out = Vec::new();
    for tok in tokenize(text) {
        if out.len() == cap {
            break;
        }
        if let Some(id) = vocab.get(&tok) {
            if !out.contains(&id) {
                out.push(id);
            }
        }
    }
    out
}

/// Deduplicates `ids` preserving first occurrence and truncates to `cap`.
pub fn dedup_capped(ids: impl IntoIterator<Item = EntityId>, cap: usize) -> Vec<EntityId> {
    let mut out = Vec::new();
    for id in ids {
        if out.len() == cap {
            break;
        }
        if !out.contains(&id) {
            out.push(id);
        }
    }
    out
}
