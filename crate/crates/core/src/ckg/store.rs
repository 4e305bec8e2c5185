use std::collections::{HashMap, HashSet};
use std::fmt;

use super::schema::{EntityKind, Relation};
use crate::error::{Error, Result};

/// Dense entity index, contiguous from 0 in insertion order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EntityId(pub u32);

impl EntityId {
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn from_index(i: usize) -> Self {
        EntityId(u32::try_from(i).expect("entity index exceeds u32"))
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Entity vocabulary: (kind, name) pairs, unique, indexed by [`EntityId`].
#[derive(Debug, Clone, Default)]
pub struct Vocabulary {
    entries: Vec<(EntityKind, String)>,
    index: HashMap<(EntityKind, String), EntityId>,
}

impl PartialEq for Vocabulary {
    fn eq(&self, other: &Self) -> bool {
        self.entries == other.entries
    }
}

impl Vocabulary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, kind: EntityKind, name: &str) -> EntityId {
        if let Some(&id) = self.index.get(&(kind, name.to_owned())) {
            return id;
        }
        let id = EntityId::from_index(self.entries.len());
        self.entries.push((kind, name.to_owned()));
        self.index.insert((kind, name.to_owned()), id);
        id
    }

    pub fn get(&self, kind: EntityKind, name: &str) -> Option<EntityId> {
        self.index.get(&(kind, name.to_owned())).copied()
    }

    pub fn lookup(&self, kind: EntityKind, name: &str) -> Result<EntityId> {
        self.get(kind, name)
            .ok_or_else(|| Error::Lookup(format!("unknown {kind} {name:?}")))
    }

    pub fn kind(&self, id: EntityId) -> EntityKind {
        self.entries[id.index()].0
    }

    pub fn name(&self, id: EntityId) -> &str {
        &self.entries[id.index()].1
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (EntityId, EntityKind, &str)> {
        self.entries
            .iter()
            .enumerate()
            .map(|(i, (k, n))| (EntityId::from_index(i), *k, n.as_str()))
    }

    pub fn ids_of_kind(&self, kind: EntityKind) -> Vec<EntityId> {
        self.iter()
            .filter(|(_, k, _)| *k == kind)
            .map(|(id, _, _)| id)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    pub head: EntityId,
    pub relation: Relation,
    pub tail: EntityId,
}

/// Deduplicated typed triples plus the vocabulary they reference.
///
/// Entities are created only when a triple mentioning them is inserted (head
/// before tail), so the vocabulary order is recoverable from the triple
/// order alone.
#[derive(Debug, Clone, Default)]
pub struct TripleSet {
    vocab: Vocabulary,
    triples: Vec<Triple>,
    seen: HashSet<Triple>,
}

impl PartialEq for TripleSet {
    fn eq(&self, other: &Self) -> bool {
        self.vocab == other.vocab && self.triples == other.triples
    }
}

impl TripleSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts a triple whose entity kinds are implied by the relation.
    /// Returns false if the triple was already present.
    pub fn insert(&mut self, head: &str, relation: Relation, tail: &str) -> bool {
        let (hk, tk) = relation.signature();
        let head = self.vocab.intern(hk, head);
        let tail = self.vocab.intern(tk, tail);
        self.insert_ids(Triple {
            head,
            relation,
            tail,
        })
    }

    /// Inserts a triple with explicit kinds, rejecting signature violations.
    pub fn insert_typed(
        &mut self,
        head_kind: EntityKind,
        head: &str,
        relation: Relation,
        tail_kind: EntityKind,
        tail: &str,
    ) -> Result<bool> {
        let expected = relation.signature();
        if (head_kind, tail_kind) != expected {
            return Err(Error::Schema(format!(
                "{relation} expects ({}, {}), got ({head_kind}, {tail_kind})",
                expected.0, expected.1
            )));
        }
        Ok(self.insert(head, relation, tail))
    }

    fn insert_ids(&mut self, t: Triple) -> bool {
        if self.seen.insert(t) {
            self.triples.push(t);
            true
        } else {
            false
        }
    }

    pub fn contains(&self, t: &Triple) -> bool {
        self.seen.contains(t)
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn n_entities(&self) -> usize {
        self.vocab.len()
    }

    /// A set over the same vocabulary holding only `triples` (which must
    /// reference ids of this vocabulary).
    pub fn with_triples(&self, triples: impl IntoIterator<Item = Triple>) -> TripleSet {
        let mut out = TripleSet {
            vocab: self.vocab.clone(),
            triples: Vec::new(),
            seen: HashSet::new(),
        };
        for t in triples {
            out.insert_ids(t);
        }
        out
    }

    /// Drops triples whose `value` entity occurs fewer than `min_count`
    /// times, then rebuilds the vocabulary so ids stay contiguous.
    pub fn prune_rare_values(&self, min_count: usize) -> TripleSet {
        let mut counts: HashMap<EntityId, usize> = HashMap::new();
        for t in &self.triples {
            for e in [t.head, t.tail] {
                if self.vocab.kind(e) == EntityKind::Value {
                    *counts.entry(e).or_default() += 1;
                }
            }
        }
        let keep = |e: EntityId| {
            self.vocab.kind(e) != EntityKind::Value || counts.get(&e).copied().unwrap_or(0) >= min_count
        };
        let mut out = TripleSet::new();
        for t in &self.triples {
            if keep(t.head) && keep(t.tail) {
                out.insert(self.vocab.name(t.head), t.relation, self.vocab.name(t.tail));
            }
        }
        out
    }
}
